#include "fsnn/campaign.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "fsnn/io.hpp"
#include "fsnn/rng.hpp"
#include "fsnn/vm.hpp"

namespace fsnn::camp {

namespace fs = std::filesystem;
using nlohmann::json;

static constexpr const char* kToolVersion = "faultscope 1.0";

// ---------------------------------------------------------------------
// config
// ---------------------------------------------------------------------

static std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    // trim
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

CampaignConfig parse_config_text(const std::string& text, const std::string& origin) {
  CampaignConfig c;
  c.config_hash = fnv1a64(text);
  std::istringstream is(text);
  std::string line, section = "campaign";
  size_t lineno = 0;
  std::map<std::string, std::string> kv;
  while (std::getline(is, line)) {
    ++lineno;
    size_t h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    line = line.substr(a, b - a + 1);
    if (line.front() == '[') {
      check(line.back() == ']', Err::ConfigError,
            origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    size_t eq = line.find('=');
    check(eq != std::string::npos, Err::ConfigError,
          origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      size_t x = s.find_first_not_of(" \t");
      size_t y = s.find_last_not_of(" \t");
      s = x == std::string::npos ? "" : s.substr(x, y - x + 1);
    };
    trim(key);
    trim(val);
    kv[section + "." + key] = val;
  }

  std::set<std::string> known;
  auto get = [&](const std::string& k, const std::string& dflt) {
    known.insert(k);
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  };

  c.model_paths = split_list(get("campaign.models", ""));
  c.test_images = get("campaign.test_images", "");
  c.test_labels = get("campaign.test_labels", "");
  c.calib_images = get("campaign.calib_images", "");
  c.calib_labels = get("campaign.calib_labels", "");
  c.hardenings = split_list(get("campaign.hardenings", "baseline"));
  c.injectors = split_list(get("campaign.injectors", ""));
  c.confidence = std::stod(get("campaign.confidence", "0.95"));
  c.margin = std::stod(get("campaign.margin", "0.005"));
  c.prior_p = std::stod(get("campaign.prior_p", "0.5"));
  const std::string seed_str = get("campaign.seed", "");
  check(!seed_str.empty(), Err::ConfigError, "campaign.seed is mandatory");
  c.seed = std::stoull(seed_str);
  c.eval_subset = std::stoull(get("campaign.eval_subset", "1000"));
  c.jobs = static_cast<uint32_t>(std::stoul(get("campaign.jobs", "1")));
  c.watchdog_mult = static_cast<uint32_t>(std::stoul(get("campaign.watchdog_mult", "10")));
  c.out_dir = get("campaign.out", "");
  c.clipper_percentile = std::stod(get("campaign.clipper_percentile", "99.9"));

  const std::string bers = get("app-weights-mbf.bers", "bridge");
  if (bers == "bridge") {
    c.mbf_bridge = true;
  } else {
    c.mbf_bridge = false;
    for (const std::string& s : split_list(bers)) c.mbf_bers.push_back(std::stod(s));
  }
  c.neuron_bler = std::stod(get("app-neurons.bler", "0.1"));
  c.neuron_ner = std::stod(get("app-neurons.ner", "0.1"));
  c.neuron_bit = static_cast<uint32_t>(std::stoul(get("app-neurons.bit", "30")));
  c.neuron_runs = static_cast<uint32_t>(std::stoul(get("app-neurons.runs", "200")));

  for (const auto& [k, v] : kv)
    check(known.count(k) > 0, Err::ConfigError, origin + ": unknown config key '" + k + "'");

  check(!c.model_paths.empty(), Err::ConfigError, "campaign.models is required");
  check(!c.test_images.empty() && !c.test_labels.empty(), Err::ConfigError,
        "campaign.test_images/test_labels are required");
  check(!c.injectors.empty(), Err::ConfigError, "campaign.injectors is required");
  check(!c.out_dir.empty(), Err::ConfigError, "campaign.out is required");
  for (const std::string& h : c.hardenings)
    check(h == "baseline" || h == "ranger" || h == "clipper" || h == "relu6",
          Err::ConfigError, "unknown hardening '" + h + "'");
  for (const std::string& i : c.injectors)
    check(i == "app-weights-sbf" || i == "app-weights-mbf" || i == "app-neurons" ||
              i == "isa-regs" || i == "isa-fus",
          Err::ConfigError, "unknown injector '" + i + "'");
  const bool needs_calib =
      std::find_if(c.hardenings.begin(), c.hardenings.end(), [](const std::string& h) {
        return h == "ranger" || h == "clipper";
      }) != c.hardenings.end();
  if (needs_calib)
    check(!c.calib_images.empty() && !c.calib_labels.empty(), Err::ConfigError,
          "ranger/clipper hardenings need campaign.calib_images/calib_labels");
  return c;
}

CampaignConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), Err::IoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------
// records
// ---------------------------------------------------------------------

std::string run_id(uint64_t config_hash, const std::string& cell, const std::string& variant,
                   const std::string& fault, uint64_t seed) {
  uint64_t h = config_hash;
  h = fnv1a64(cell, h);
  h = fnv1a64(variant, h);
  h = fnv1a64(fault, h);
  h = fnv1a64(&seed, sizeof(seed), h);
  return hex64(h);
}

std::string outcome_to_json(const eval::RunOutcome& o) {
  json j;
  j["v"] = 1;  // record schema version
  j["run_id"] = o.run_id;
  j["cell"] = o.cell;
  j["model"] = o.model;
  j["hardening"] = o.hardening;
  j["fault"] = o.fault;
  j["termination"] = eval::termination_name(o.termination);
  j["label"] = eval::label_name(o.label);
  j["acc_golden"] = o.acc_golden;
  if (std::isnan(o.acc_faulty))
    j["acc_faulty"] = nullptr;
  else
    j["acc_faulty"] = o.acc_faulty;
  j["excitations"] = o.excitations;
  j["uses"] = o.uses;
  j["induced_ber"] = o.induced_ber;
  j["never_used"] = o.never_used;
  j["app_ber"] = o.app_ber;
  j["golden_conf"] = hex64(o.golden_conf_digest);
  j["faulty_conf"] = hex64(o.faulty_conf_digest);
  if (!o.sites.empty()) j["sites"] = o.sites;
  if (!o.error.empty()) j["error"] = o.error;
  return j.dump();
}

eval::RunOutcome outcome_from_json(const std::string& line) {
  json j = json::parse(line);
  check(j.value("v", 0) == 1, Err::BadVersion,
        "unsupported record schema version " + std::to_string(j.value("v", 0)));
  eval::RunOutcome o;
  o.run_id = j.at("run_id").get<std::string>();
  o.cell = j.at("cell").get<std::string>();
  o.model = j.at("model").get<std::string>();
  o.hardening = j.at("hardening").get<std::string>();
  o.fault = j.at("fault").get<std::string>();
  const std::string term = j.at("termination").get<std::string>();
  o.termination = term == "Completed" ? eval::Termination::Completed
                  : term == "Trap"    ? eval::Termination::Trap
                                      : eval::Termination::Timeout;
  const std::string lab = j.at("label").get<std::string>();
  o.label = lab == "Masked"        ? eval::Label::Masked
            : lab == "SafeSDC"     ? eval::Label::SafeSDC
            : lab == "CriticalSDC" ? eval::Label::CriticalSDC
                                   : eval::Label::DUE;
  o.acc_golden = j.at("acc_golden").get<double>();
  o.acc_faulty = j.at("acc_faulty").is_null() ? std::nan("")
                                              : j.at("acc_faulty").get<double>();
  o.excitations = j.at("excitations").get<uint64_t>();
  o.uses = j.at("uses").get<uint64_t>();
  o.induced_ber = j.at("induced_ber").get<double>();
  o.never_used = j.at("never_used").get<bool>();
  o.app_ber = j.at("app_ber").get<double>();
  o.golden_conf_digest = std::stoull(j.value("golden_conf", "0"), nullptr, 16);
  o.faulty_conf_digest = std::stoull(j.value("faulty_conf", "0"), nullptr, 16);
  if (j.contains("sites")) o.sites = j["sites"].get<std::string>();
  if (j.contains("error")) o.error = j["error"].get<std::string>();
  return o;
}

static std::vector<eval::RunOutcome> load_records(const std::string& path) {
  std::vector<eval::RunOutcome> out;
  std::ifstream in(path);
  if (!in.good()) return out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(outcome_from_json(line));
    } catch (const std::exception& e) {
      fail(Err::MissingRecord,
           path + ":" + std::to_string(lineno) + ": corrupt record: " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------
// execution helpers
// ---------------------------------------------------------------------

namespace {

void parallel_for(size_t n, uint32_t jobs, const std::function<void(size_t, uint32_t)>& fn) {
  const uint32_t workers = std::max(1u, std::min<uint32_t>(jobs, static_cast<uint32_t>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (uint32_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i, t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

double subset_accuracy(const Tensor& logits, const std::vector<uint32_t>& labels) {
  const uint32_t n = logits.dim(0), c = logits.dim(1);
  size_t correct = 0;
  for (uint32_t i = 0; i < n; ++i)
    if (argmax_row(logits.data.data() + static_cast<size_t>(i) * c, c) == labels[i]) ++correct;
  return static_cast<double>(correct) / n;
}

}  // namespace

IsaEvalContext build_isa_context(const Model& m, const Dataset& subset, uint32_t mult) {
  IsaEvalContext ctx;
  Tensor like = subset.sample(0);
  ctx.program = isa::lower(m, like);
  const uint32_t n = static_cast<uint32_t>(subset.size());
  ctx.golden_logits = Tensor({n, m.meta.class_count});
  ctx.labels = subset.labels;
  isa::Machine machine(ctx.program);
  uint64_t max_icount = 0;
  for (uint32_t i = 0; i < n; ++i) {
    ctx.images.push_back(subset.sample(i));
    machine.set_input(ctx.images.back());
    isa::SiteStats s;
    isa::ExecResult r = machine.run_golden(s);
    check(r.termination == eval::Termination::Completed, Err::BadArgument,
          "golden VM run did not complete");
    std::memcpy(ctx.golden_logits.data.data() + static_cast<size_t>(i) * m.meta.class_count,
                r.output.data(), m.meta.class_count * sizeof(float));
    ctx.stats.accumulate(s);
    max_icount = std::max(max_icount, r.icount);
  }
  ctx.golden_conf = softmax_rows(ctx.golden_logits);
  ctx.acc_golden = subset_accuracy(ctx.golden_logits, subset.labels);
  ctx.watchdog = static_cast<uint64_t>(mult) * max_icount;
  return ctx;
}

// DUE short-circuits: the fault is permanent, so the first trapped/hung
// image decides the run.
eval::RunOutcome run_isa_spec(const IsaEvalContext& ctx, isa::Machine& machine,
                              const isa::IsaFaultSpec& spec, const std::string& cell,
                              const std::string& model, const std::string& hardening) {
  eval::RunOutcome o;
  o.cell = cell;
  o.model = model;
  o.hardening = hardening;
  o.fault = spec.describe();
  o.acc_golden = ctx.acc_golden;

  const isa::ExcitationCounter counter = ctx.stats.counter_for(spec);
  o.excitations = counter.excitations;
  o.uses = counter.uses;
  o.induced_ber = isa::induced_ber(counter);
  o.never_used = counter.uses == 0;

  const uint32_t n = static_cast<uint32_t>(ctx.images.size());
  const uint32_t classes = ctx.golden_logits.dim(1);
  Tensor faulty_logits({n, classes});
  for (uint32_t i = 0; i < n; ++i) {
    machine.set_input(ctx.images[i]);
    const isa::ExecResult r = machine.run_fault(spec, ctx.watchdog);
    if (r.termination != eval::Termination::Completed) {
      o.termination = r.termination;
      o.label = eval::Label::DUE;
      o.acc_faulty = std::nan("");
      return o;
    }
    std::memcpy(faulty_logits.data.data() + static_cast<size_t>(i) * classes,
                r.output.data(), classes * sizeof(float));
  }
  o.termination = eval::Termination::Completed;
  const Tensor faulty_conf = softmax_rows(faulty_logits);
  o.label = eval::classify(ctx.golden_conf, faulty_conf, o.termination);
  o.acc_faulty = subset_accuracy(faulty_logits, ctx.labels);
  o.golden_conf_digest = ctx.golden_conf.bits_hash();
  o.faulty_conf_digest = faulty_conf.bits_hash();
  return o;
}

namespace {

Model make_variant(const Model& base, const std::string& hardening, const Dataset* calib,
                   double clipper_percentile) {
  if (hardening == "baseline") return base;
  check(calib != nullptr, Err::ConfigError, "hardening '" + hardening + "' needs a calib set");
  if (hardening == "ranger") return apply_ranger(base, profile_ranges(base, *calib));
  if (hardening == "clipper")
    return apply_adaptive_clipper(base, *calib, clipper_percentile, std::nullopt, nullptr);
  if (hardening == "relu6") return apply_swap_relu6(base, std::nullopt, nullptr);
  fail(Err::ConfigError, "unknown hardening " + hardening);
}

}  // namespace

// ---------------------------------------------------------------------
// report building
// ---------------------------------------------------------------------

static std::pair<std::string, std::string> split_cell(const std::string& cell) {
  // "app-weights-sbf" -> {"app", "weights-sbf"}; "isa-regs" -> {"isa", "regs"}
  const size_t dash = cell.find('-');
  if (dash == std::string::npos) return {cell, ""};
  return {cell.substr(0, dash), cell.substr(dash + 1)};
}

static CampaignReport build_report(const std::vector<eval::RunOutcome>& outcomes) {
  CampaignReport rep;
  rep.total_runs = outcomes.size();

  // distribution per (cell, model, hardening)
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<eval::Label>> groups;
  for (const auto& o : outcomes) {
    if (!o.error.empty()) continue;  // recorded but not aggregated
    groups[{o.cell, o.model, o.hardening}].push_back(o.label);
  }
  for (const auto& [key, labels] : groups) {
    const auto& [cell, model, hardening] = key;
    auto [injector, target] = split_cell(cell);
    rep.distribution.push_back({injector, target, model, hardening, eval::aggregate(labels)});
  }

  // accuracy per (model, hardening, target, ber bin); DUE runs carry no accuracy
  struct Acc {
    double sum = 0;
    size_t n = 0;
  };
  std::map<std::tuple<std::string, std::string, std::string, std::string>, Acc> acc;
  for (const auto& o : outcomes) {
    if (!o.error.empty() || o.label == eval::Label::DUE) continue;
    auto [injector, target] = split_cell(o.cell);
    std::string bin;
    if (injector == "isa") {
      bin = o.never_used ? "[0,1e-6)" : eval::ber_bin_of(o.induced_ber);
    } else if (o.app_ber >= 0.0) {
      bin = eval::ber_bin_of(o.app_ber);
    } else {
      continue;  // SBF runs are the distribution input, not a BER series
    }
    Acc& a = acc[{o.model, o.hardening, target, bin}];
    a.sum += o.acc_faulty;
    a.n += 1;
  }
  for (const auto& [key, a] : acc) {
    const auto& [model, hardening, target, bin] = key;
    rep.accuracy.push_back({model, hardening, target, bin, a.sum / a.n, a.n});
  }

  // rankings per (model, cell, metric)
  std::map<std::pair<std::string, std::string>, std::map<std::string, eval::Distribution>>
      by_model_cell;
  for (const auto& r : rep.distribution) {
    const std::string cell = r.injector + "-" + r.target;
    by_model_cell[{r.model, cell}][r.hardening] = r.dist;
  }
  std::map<std::tuple<std::string, std::string, std::string>, Acc> cell_acc;
  std::map<std::tuple<std::string, std::string, std::string>, Acc> cell_rad;
  for (const auto& o : outcomes) {
    if (!o.error.empty() || o.label == eval::Label::DUE || std::isnan(o.acc_faulty)) continue;
    Acc& a = cell_acc[{o.model, o.cell, o.hardening}];
    a.sum += o.acc_faulty;
    a.n += 1;
    if (o.acc_golden > 0.0) {
      Acc& r = cell_rad[{o.model, o.cell, o.hardening}];
      r.sum += eval::rad(o.acc_golden, o.acc_faulty);
      r.n += 1;
    }
  }
  for (const auto& [key, a] : cell_rad) {
    const auto& [model, cell, hardening] = key;
    rep.rad.push_back({model, cell, hardening, a.sum / a.n, a.n});
  }
  for (const auto& [key, hard_map] : by_model_cell) {
    const auto& [model, cell] = key;
    {
      Ranking rk;
      rk.model = model;
      rk.injector = cell;
      rk.metric = "critical_sdc";
      std::vector<std::pair<double, std::string>> v;
      for (const auto& [h, d] : hard_map) v.push_back({d.critical_sdc_pct, h});
      std::sort(v.begin(), v.end());  // ascending critical %, ties alphabetical
      for (auto& [_, h] : v) rk.hardenings.push_back(h);
      rep.rankings.push_back(std::move(rk));
    }
    {
      Ranking rk;
      rk.model = model;
      rk.injector = cell;
      rk.metric = "mean_accuracy";
      std::vector<std::pair<double, std::string>> v;
      for (const auto& [h, d] : hard_map) {
        (void)d;
        auto it = cell_acc.find({model, cell, h});
        const double mean = it == cell_acc.end() || it->second.n == 0
                                ? -1.0
                                : it->second.sum / it->second.n;
        v.push_back({-mean, h});  // descending accuracy, ties alphabetical
      }
      std::sort(v.begin(), v.end());
      for (auto& [_, h] : v) rk.hardenings.push_back(h);
      rep.rankings.push_back(std::move(rk));
    }
  }

  // divergence note: APP vs ISA ranking disagreements per (model, metric)
  for (const auto& rk_app : rep.rankings) {
    if (split_cell(rk_app.injector).first != "app") continue;
    for (const auto& rk_isa : rep.rankings) {
      if (split_cell(rk_isa.injector).first != "isa") continue;
      if (rk_isa.model != rk_app.model || rk_isa.metric != rk_app.metric) continue;
      if (rk_isa.hardenings != rk_app.hardenings) {
        std::ostringstream os;
        os << "model=" << rk_app.model << " metric=" << rk_app.metric << " "
           << rk_app.injector << "=[";
        for (size_t i = 0; i < rk_app.hardenings.size(); ++i)
          os << (i ? ">" : "") << rk_app.hardenings[i];
        os << "] vs " << rk_isa.injector << "=[";
        for (size_t i = 0; i < rk_isa.hardenings.size(); ++i)
          os << (i ? ">" : "") << rk_isa.hardenings[i];
        os << "]";
        rep.divergences.push_back(os.str());
      }
    }
  }
  std::sort(rep.divergences.begin(), rep.divergences.end());
  return rep;
}

static void write_report_files(const CampaignReport& rep, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/distribution.csv");
    f << eval::distribution_csv(rep.distribution);
  }
  {
    std::ofstream f(out_dir + "/accuracy_by_ber.csv");
    f << eval::accuracy_csv(rep.accuracy);
  }
  {
    std::ofstream f(out_dir + "/summary.txt");
    f << "== hardening rankings (best first) ==\n";
    for (const auto& rk : rep.rankings) {
      f << rk.model << " " << rk.injector << " by " << rk.metric << ": ";
      for (size_t i = 0; i < rk.hardenings.size(); ++i) f << (i ? " > " : "") << rk.hardenings[i];
      f << "\n";
    }
    f << "\n== mean RAD per cell (non-DUE runs) ==\n";
    for (const auto& r : rep.rad) {
      f << r.model << " " << r.injector << " " << r.hardening << ": " << r.mean_rad
        << " over " << r.runs << " runs\n";
    }
    f << "\n== APP vs ISA ranking divergences ==\n";
    if (rep.divergences.empty()) f << "(none)\n";
    for (const auto& d : rep.divergences) f << d << "\n";
    f << "\n== BER bridges ==\n";
    for (const auto& [key, b] : rep.bridges) {
      f << key << ": range=[" << b.ber_min << "," << b.ber_max << "] rule=" << b.rule
        << " samples=";
      for (size_t i = 0; i < b.samples.size(); ++i) f << (i ? "," : "") << b.samples[i];
      f << "\n";
    }
    f << "\n== provenance ==\n" << rep.provenance;
  }
}

// ---------------------------------------------------------------------
// the campaign itself
// ---------------------------------------------------------------------

CampaignReport run_campaign(const CampaignConfig& config) {
  fs::create_directories(config.out_dir);
  const std::string records_path = config.out_dir + "/records.jsonl";

  std::map<std::string, eval::RunOutcome> existing;
  for (auto& o : load_records(records_path)) existing[o.run_id] = std::move(o);

  std::ofstream rec(records_path, std::ios::app);
  check(rec.good(), Err::IoError, "cannot open " + records_path);
  std::vector<eval::RunOutcome> all;
  size_t new_runs = 0;
  auto commit = [&](eval::RunOutcome o) {
    if (existing.count(o.run_id)) {
      all.push_back(existing[o.run_id]);
      return;
    }
    rec << outcome_to_json(o) << "\n";
    rec.flush();
    ++new_runs;
    all.push_back(std::move(o));
  };

  const Dataset test = load_mnist_idx(config.test_images, config.test_labels);
  std::optional<Dataset> calib;
  if (!config.calib_images.empty())
    calib = load_mnist_idx(config.calib_images, config.calib_labels);
  const Dataset subset = test.subset(0, std::min(config.eval_subset, test.size()));

  const bool want_regs =
      std::find(config.injectors.begin(), config.injectors.end(), "isa-regs") !=
      config.injectors.end();
  const bool want_fus = std::find(config.injectors.begin(), config.injectors.end(),
                                  "isa-fus") != config.injectors.end();
  auto wants = [&](const char* cell) {
    return std::find(config.injectors.begin(), config.injectors.end(), cell) !=
           config.injectors.end();
  };

  std::map<std::string, eval::BerBridge> bridges;

  for (const std::string& model_path : config.model_paths) {
    const Model base = load_model(model_path);
    for (const std::string& hardening : config.hardenings) {
      const Model variant = make_variant(base, hardening, calib ? &*calib : nullptr,
                                         config.clipper_percentile);
      const std::string vname = base.meta.name + "/" + hardening;
      save_model(variant, config.out_dir + "/" + base.meta.name + "-" + hardening + ".fsnn");

      std::vector<eval::RunOutcome> isa_outcomes;
      if (want_regs || want_fus) {
        const IsaEvalContext ctx = build_isa_context(variant, subset, config.watchdog_mult);
        for (const bool regs_pass : {true, false}) {
          if (regs_pass && !want_regs) continue;
          if (!regs_pass && !want_fus) continue;
          const std::string cell = regs_pass ? "isa-regs" : "isa-fus";
          const auto specs = isa::enumerate_fault_space(ctx.program, regs_pass, !regs_pass);
          std::vector<eval::RunOutcome> results(specs.size());
          std::vector<char> cached(specs.size(), 0);
          // resume check first so cached runs cost nothing
          std::vector<size_t> todo;
          for (size_t i = 0; i < specs.size(); ++i) {
            const std::string rid =
                run_id(config.config_hash, cell, vname, specs[i].describe(), config.seed);
            if (auto it = existing.find(rid); it != existing.end()) {
              results[i] = it->second;
              cached[i] = 1;
            } else {
              todo.push_back(i);
            }
          }
          if (!todo.empty()) {
            std::vector<std::unique_ptr<isa::Machine>> machines(
                std::max<uint32_t>(1, config.jobs));
            for (auto& mp : machines) mp = std::make_unique<isa::Machine>(ctx.program);
            parallel_for(todo.size(), config.jobs, [&](size_t k, uint32_t tid) {
              const size_t i = todo[k];
              eval::RunOutcome o = run_isa_spec(ctx, *machines[tid], specs[i], cell,
                                                base.meta.name, hardening);
              o.run_id =
                  run_id(config.config_hash, cell, vname, specs[i].describe(), config.seed);
              results[i] = std::move(o);
            });
          }
          for (size_t i = 0; i < specs.size(); ++i) {
            if (cached[i])
              all.push_back(results[i]);
            else
              commit(results[i]);
            isa_outcomes.push_back(results[i]);
          }
        }
      }

      // BER bridge for this variant
      std::optional<eval::BerBridge> bridge;
      if (!isa_outcomes.empty()) {
        bool any_used = false;
        for (const auto& o : isa_outcomes) any_used |= o.uses > 0;
        if (any_used) {
          bridge = eval::build_ber_bridge(isa_outcomes, config.seed);
          bridges[vname] = *bridge;
        }
      }

      // APP cells
      app::StatSizing sizing;
      sizing.confidence = config.confidence;
      sizing.margin = config.margin;
      sizing.p = config.prior_p;

      auto run_app_cell = [&](const char* cellname, const app::AppFaultSpec& spec,
                              const app::CampaignParams& params) {
        auto outcomes = app::run_app_campaign(variant, test, spec, sizing, params);
        for (auto& o : outcomes) {
          o.cell = cellname;
          o.model = base.meta.name;
          o.hardening = hardening;
          o.run_id = run_id(config.config_hash, cellname, vname, o.fault, config.seed);
          commit(o);
        }
      };

      app::CampaignParams params;
      params.seed = config.seed;
      params.eval_subset = config.eval_subset;
      params.neuron_runs = config.neuron_runs;

      if (wants("app-weights-sbf")) {
        app::AppFaultSpec spec;
        spec.target = app::Target::Weight;
        spec.mode = app::Mode::SBF;
        run_app_cell("app-weights-sbf", spec, params);
      }
      if (wants("app-weights-mbf")) {
        app::AppFaultSpec spec;
        spec.target = app::Target::Weight;
        spec.mode = app::Mode::MBF;
        app::CampaignParams p2 = params;
        if (config.mbf_bridge) {
          check(bridge.has_value(), Err::ConfigError,
                "app-weights-mbf in bridge mode needs ISA outcomes (enable isa-regs/"
                "isa-fus or set [app-weights-mbf] bers explicitly)");
          // skip BERs below the population resolution instead of failing runs
          const uint64_t pop = app::weight_bit_population(variant);
          for (double b : bridge->samples)
            if (std::llround(b * static_cast<double>(pop)) >= 1)
              p2.mbf_bers.push_back(b);
        } else {
          p2.mbf_bers = config.mbf_bers;
        }
        if (!p2.mbf_bers.empty()) run_app_cell("app-weights-mbf", spec, p2);
      }
      if (wants("app-neurons")) {
        app::AppFaultSpec spec;
        spec.target = app::Target::Neuron;
        spec.bler = config.neuron_bler;
        spec.ner = config.neuron_ner;
        spec.bit = config.neuron_bit;
        run_app_cell("app-neurons", spec, params);
      }
    }
  }

  CampaignReport rep = build_report(all);
  rep.bridges = std::move(bridges);
  rep.new_runs = new_runs;
  {
    std::ostringstream prov;
    prov << "tool: " << kToolVersion << "\n";
    prov << "config_hash: " << hex64(config.config_hash) << "\n";
    prov << "seed: " << config.seed << "\n";
    prov << "eval_subset: " << subset.size() << " (first " << subset.size()
         << " test samples)\n";
    prov << "margin: " << config.margin << " confidence: " << config.confidence << "\n";
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
    prov << "rendered_at: " << buf << "Z\n";
    rep.provenance = prov.str();
  }
  write_report_files(rep, config.out_dir);
  return rep;
}

CampaignReport render_report(const std::string& records_path, const std::string& out_dir) {
  auto outcomes = load_records(records_path);
  check(!outcomes.empty(), Err::MissingRecord, "no records in " + records_path);
  CampaignReport rep = build_report(outcomes);
  std::ostringstream prov;
  prov << "tool: " << kToolVersion << "\n";
  prov << "rebuilt_from: " << records_path << "\n";
  rep.provenance = prov.str();
  write_report_files(rep, out_dir);
  return rep;
}

}  // namespace fsnn::camp
