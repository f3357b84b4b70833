// cass: encode/decode Cassandra containers, inspect them, and run the
// self-speculative decoding simulation and its reports.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cassandra/container.hpp"
#include "cassandra/decoder_sim.hpp"
#include "cassandra/perfmodel.hpp"
#include "cassandra/rng.hpp"
#include "cassandra/selection.hpp"
#include "cassandra/specdecode.hpp"
#include "cassandra/superblock.hpp"
#include "cassandra/tensor_file.hpp"

namespace {

using namespace cassandra;

KeepBitmap select_for_tensor(const RawTensor& t, double prune_fraction) {
  double keep = 1.0 - prune_fraction;
  std::vector<float> vals(t.values.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = to_float(t.values[i]);
  if (t.dims.size() == 2) {
    // per-row magnitude selection (unit calibration norms)
    MatrixF m(t.dims[0], t.dims[1]);
    for (std::size_t i = 0; i < vals.size(); ++i) m.data[i] = std::fabs(vals[i]);
    return select_topk_per_row(m, keep);
  }
  return kv_select_per_token(vals, keep);
}

std::vector<std::vector<int>> default_prompts(std::uint64_t seed, int vocab,
                                              std::size_t count = 8,
                                              std::size_t len = 8) {
  SplitMix64 rng(seed ^ 0x9d2c5680u);
  std::vector<std::vector<int>> prompts(count);
  for (auto& p : prompts)
    for (std::size_t i = 0; i < len; ++i)
      p.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab))));
  return prompts;
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad manifest line: " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.pop_back();
    };
    strip(key);
    strip(val);
    kv[key] = val;
  }
  return kv;
}

std::string get_or(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

void print_config(const DraftConfig& c) {
  std::cout << "mode=" << c.mode << " w_p=" << c.w_p << " w_t=" << c.w_t
            << " kv_p=" << c.kv_p << " kv_t=" << c.kv_t << " gamma=" << c.gamma;
}

int cmd_encode(const std::string& input, const std::string& output, DraftConfig cfg,
               bool with_superblocks) {
  cfg.validate();
  RawTensor t = read_tensor_file(input);
  KeepBitmap bm = select_for_tensor(t, cfg.w_p);
  CassandraTensor ct = encode_tensor(t.values, bm, cfg.mode, cfg.w_t, t.dims);
  if (with_superblocks) {
    auto packed = serialize_superblocks(pack(ct, View::target));
    write_cass_file(output, ct, &packed);
  } else {
    write_cass_file(output, ct);
  }
  CompressionStats s = compression_stats(ct);
  std::cout << "encoded " << ct.element_count << " elements, kept " << ct.kept_count
            << "\nspec_bits_per_elem=" << s.spec_bits_per_elem
            << " total_bits_per_elem=" << s.total_bits_per_elem
            << " compression_ratio=" << s.compression_ratio << "\n";
  return 0;
}

int cmd_decode(const std::string& input, const std::string& output,
               const std::string& view) {
  CassFile f = read_cass_file(input);
  RawTensor t;
  t.dims = f.tensor.dims;
  t.values = view == "draft" ? decode_draft(f.tensor) : decode_target(f.tensor);
  write_tensor_file_bf16(output, t);
  std::cout << "decoded " << t.values.size() << " elements (" << view << " view)\n";
  return 0;
}

int cmd_inspect(const std::string& input) {
  CassFile f = read_cass_file(input);
  const CassandraTensor& t = f.tensor;
  std::cout << "mode=" << int(t.mode) << " version=" << t.version << "\ndims=";
  for (std::size_t i = 0; i < t.dims.size(); ++i)
    std::cout << (i ? "x" : "") << t.dims[i];
  std::cout << "\nN=" << t.element_count << " K=" << t.kept_count
            << " m_s=" << int(t.spec_mantissa_bits) << "\n";
  if (t.mode == 1)
    std::cout << "codebook_symbols=" << t.codebook.size() << "\n";
  else
    std::cout << "mx_block_size=" << t.mx_block_size << "\n";
  auto lens = stream_lengths(t, View::target);
  std::size_t total = 0;
  for (std::size_t i = 0; i < kStreamTypes; ++i) {
    std::cout << "section " << stream_type_name(static_cast<StreamType>(i)) << ": "
              << lens[i] << " bytes\n";
    total += lens[i];
  }
  std::cout << "section_bytes_total=" << total << "\n";
  if (f.packed_section)
    std::cout << "superblock_section=" << f.packed_section->size() << " bytes\n";
  CompressionStats s = compression_stats(t);
  std::cout << "spec_bits_per_elem=" << s.spec_bits_per_elem
            << " total_bits_per_elem=" << s.total_bits_per_elem
            << " compression_ratio=" << s.compression_ratio << "\n";
  return 0;
}

int cmd_simulate(const std::string& manifest_path, const std::string& out_prefix) {
  auto kv = read_manifest(manifest_path);
  TinyLmConfig mc;
  mc.vocab = std::stoi(get_or(kv, "vocab", "64"));
  mc.d_model = std::stoi(get_or(kv, "d_model", "64"));
  mc.layers = std::stoi(get_or(kv, "layers", "2"));
  std::uint64_t seed = std::stoull(get_or(kv, "seed", "1"));
  DraftConfig cfg;
  cfg.mode = std::stoi(get_or(kv, "mode", "1"));
  cfg.w_p = std::stod(get_or(kv, "prune", "0.4"));
  cfg.w_t = std::stoi(get_or(kv, "truncate", "4"));
  cfg.kv_p = std::stod(get_or(kv, "kv_prune", "0.4"));
  cfg.kv_t = std::stoi(get_or(kv, "kv_truncate", "4"));
  cfg.gamma = std::stoi(get_or(kv, "gamma", "4"));
  int max_tokens = std::stoi(get_or(kv, "max_tokens", "64"));
  double bandwidth = std::stod(get_or(kv, "bandwidth", "273e9"));
  double overhead = std::stod(get_or(kv, "overhead", "0.05"));
  DecodeMode mode =
      get_or(kv, "decode", "greedy") == "sampled" ? DecodeMode::sampled : DecodeMode::greedy;

  std::vector<int> prompt;
  std::istringstream ps(get_or(kv, "prompt", "1 2 3 4"));
  for (int tok; ps >> tok;) prompt.push_back(tok);

  TinyLm model = init_tiny_lm(seed, mc);
  SpecRunResult res = run_speculative(model, cfg, prompt, max_tokens, mode, seed);
  std::vector<int> baseline = run_autoregressive(model, prompt, max_tokens, mode, seed);

  const SpecRunStats& st = res.stats;
  std::cout << "config: ";
  print_config(cfg);
  std::cout << "\nalpha=" << st.alpha << "\nrounds=" << st.rounds << "\nhistogram=";
  for (std::size_t i = 0; i < st.accepted_histogram.size(); ++i)
    std::cout << (i ? "," : "") << st.accepted_histogram[i];
  std::cout << "\nbytes_draft_per_round=" << st.bytes_draft_per_round
            << "\nbytes_target_per_round=" << st.bytes_target_per_round << "\n";

  HardwareProfile hw{bandwidth, "manifest"};
  double gain = speedup_estimate(st.bytes_draft_per_round / cfg.gamma,
                                 st.bytes_target_per_round, hw, st.accepted_histogram,
                                 cfg.gamma, overhead);
  std::cout << "modeled_gain=" << gain << "\n";
  if (mode == DecodeMode::greedy)
    std::cout << "lossless: outputs match baseline = "
              << (res.tokens == baseline ? "true" : "false") << "\n";

  if (!out_prefix.empty()) {
    std::ofstream tokens(out_prefix + ".tokens");
    for (std::size_t i = 0; i < res.tokens.size(); ++i)
      tokens << (i ? " " : "") << res.tokens[i];
    tokens << "\n";
    std::ifstream src(manifest_path);
    std::ofstream copy(out_prefix + ".manifest");
    copy << src.rdbuf();
  }
  return 0;
}

int cmd_sweep(std::uint64_t seed, int mode, int gamma, int max_tokens) {
  TinyLm model = init_tiny_lm(seed);
  std::vector<DraftConfig> configs;
  {  // no-compression reference row
    DraftConfig c;
    c.mode = mode;
    c.w_p = c.kv_p = 0.0;
    c.w_t = c.kv_t = 0;
    c.gamma = gamma;
    configs.push_back(c);
  }
  for (int p = 30; p <= 60; p += 10) {  // VP only
    DraftConfig c;
    c.mode = mode;
    c.w_p = c.kv_p = p / 100.0;
    c.w_t = c.kv_t = 0;
    c.gamma = gamma;
    configs.push_back(c);
  }
  for (int t = 1; t <= 5; ++t) {  // MT only
    DraftConfig c;
    c.mode = mode;
    c.w_p = c.kv_p = 0.0;
    c.w_t = c.kv_t = t;
    c.gamma = gamma;
    configs.push_back(c);
  }
  for (int p = 30; p <= 60; p += 10)  // VP + MT
    for (int t = 1; t <= 5; ++t) {
      DraftConfig c;
      c.mode = mode;
      c.w_p = c.kv_p = p / 100.0;
      c.w_t = c.kv_t = t;
      c.gamma = gamma;
      configs.push_back(c);
    }

  auto prompts = default_prompts(seed, model.cfg.vocab);
  auto rows = sweep_tradeoff(model, configs, prompts, max_tokens, DecodeMode::greedy, seed);
  std::cout << "w_p\tw_t\tkv_p\tkv_t\tcompression_ratio\talpha\n";
  for (const TradeoffRow& r : rows)
    std::cout << r.cfg.w_p << "\t" << r.cfg.w_t << "\t" << r.cfg.kv_p << "\t"
              << r.cfg.kv_t << "\t" << r.compression_ratio << "\t" << r.alpha << "\n";
  return 0;
}

int cmd_gridsearch(std::uint64_t seed, int mode, int gamma, int max_tokens) {
  TinyLm model = init_tiny_lm(seed);
  auto grid = standard_grid(mode, gamma);
  GridSearchOptions opts;
  opts.max_tokens = max_tokens;
  opts.seed = seed;
  auto prompts = default_prompts(seed, model.cfg.vocab);
  GridSearchResult res = grid_search(model, prompts, grid, opts);
  std::cout << "w_p\tw_t\tkv_p\tkv_t\talpha\tobjective\n";
  for (const GridRow& r : res.table)
    std::cout << r.cfg.w_p << "\t" << r.cfg.w_t << "\t" << r.cfg.kv_p << "\t"
              << r.cfg.kv_t << "\t" << r.alpha << "\t" << r.objective << "\n";
  std::cout << "best: ";
  print_config(res.best);
  std::cout << "\n";
  return 0;
}

int cmd_entropy(const std::vector<std::string>& inputs) {
  std::vector<NamedTensor> tensors;
  for (const std::string& path : inputs) {
    RawTensor t = read_tensor_file(path);
    tensors.push_back({path, std::move(t.values)});
  }
  EntropyReport rep = entropy_report(tensors);
  std::cout << "tensor\telements\tshannon_bits\tavg_unary_bits\n";
  for (const EntropyRow& r : rep.rows)
    std::cout << r.name << "\t" << r.elements << "\t" << r.shannon_bits << "\t"
              << r.avg_unary_bits << "\n";
  std::cout << "aggregate\t-\t" << rep.aggregate_shannon << "\t" << rep.aggregate_unary
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cassandra self-speculative decoding toolkit"};
  app.require_subcommand(1);

  DraftConfig cfg;
  std::string input, output = "out.cass", view = "target", manifest, out_prefix;
  std::uint64_t seed = 1;
  double bandwidth = 273e9;
  int max_tokens = 32;
  bool with_superblocks = false;
  std::vector<std::string> entropy_inputs;

  auto add_cfg_flags = [&](CLI::App* c) {
    c->add_option("--mode", cfg.mode, "1 = unary/lossless, 2 = MX/lossy");
    c->add_option("--prune", cfg.w_p, "weight prune fraction");
    c->add_option("--truncate", cfg.w_t, "weight mantissa bits truncated");
    c->add_option("--kv-prune", cfg.kv_p, "KV prune fraction");
    c->add_option("--kv-truncate", cfg.kv_t, "KV mantissa bits truncated");
    c->add_option("--gamma", cfg.gamma, "draft length");
  };

  auto* enc = app.add_subcommand("encode", "encode a raw tensor into .cass");
  enc->add_option("input", input)->required();
  enc->add_option("-o,--output", output);
  enc->add_flag("--superblock", with_superblocks, "append packed superblock section");
  add_cfg_flags(enc);

  auto* dec = app.add_subcommand("decode", "decode a .cass file to a raw tensor");
  dec->add_option("input", input)->required();
  dec->add_option("-o,--output", output)->required();
  dec->add_option("--view", view)->check(CLI::IsMember({"draft", "target"}));

  auto* ins = app.add_subcommand("inspect", "print container header and section sizes");
  ins->add_option("input", input)->required();

  auto* sim = app.add_subcommand("simulate", "run the speculative decoding simulation");
  sim->add_option("--manifest", manifest)->required();
  sim->add_option("-o,--output", out_prefix, "output prefix for tokens + manifest copy");

  auto* swp = app.add_subcommand("sweep", "acceptance-rate vs compression-ratio sweep");
  swp->add_option("--seed", seed);
  swp->add_option("--max-tokens", max_tokens);
  add_cfg_flags(swp);

  auto* grd = app.add_subcommand("gridsearch", "grid search over prune/truncate ratios");
  grd->add_option("--seed", seed);
  grd->add_option("--max-tokens", max_tokens);
  grd->add_option("--bandwidth", bandwidth);
  add_cfg_flags(grd);

  auto* ent = app.add_subcommand("entropy", "exponent entropy report for tensor files");
  ent->add_option("inputs", entropy_inputs)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (enc->parsed()) return cmd_encode(input, output, cfg, with_superblocks);
    if (dec->parsed()) return cmd_decode(input, output, view);
    if (ins->parsed()) return cmd_inspect(input);
    if (sim->parsed()) return cmd_simulate(manifest, out_prefix);
    if (swp->parsed()) return cmd_sweep(seed, cfg.mode, cfg.gamma, max_tokens);
    if (grd->parsed()) return cmd_gridsearch(seed, cfg.mode, cfg.gamma, max_tokens);
    if (ent->parsed()) return cmd_entropy(entropy_inputs);
  } catch (const cassandra::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
