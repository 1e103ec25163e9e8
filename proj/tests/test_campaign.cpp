#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fsnn/campaign.hpp"
#include "fsnn/io.hpp"
#include "fsnn/synth.hpp"
#include "fsnn/train.hpp"
#include "fsnn/vm.hpp"

using namespace fsnn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct MiniWorld {
  fs::path dir;
  std::string model_path, ti, tl, ci, cl;

  MiniWorld() {
    dir = fs::temp_directory_path() / "fsnn_campaign_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    Dataset train_ds = synth_digits(300, 5, "train");
    Dataset test_ds = synth_digits(80, 6, "test");
    ti = (dir / "t-img").string();
    tl = (dir / "t-lab").string();
    ci = (dir / "c-img").string();
    cl = (dir / "c-lab").string();
    write_idx_images(ti, test_ds.images);
    write_idx_labels(tl, test_ds.labels);
    write_idx_images(ci, train_ds.images);
    write_idx_labels(cl, train_ds.labels);

    Model m = build_micro_linear(3);
    TrainHyper h;
    h.epochs = 2;
    h.lr = 0.2f;
    h.seed = 4;
    Model trained = train(m, train_ds, h);
    model_path = (dir / "micro.fsnn").string();
    save_model(trained, model_path);
  }

  std::string config_text(const std::string& out, const std::string& injectors) const {
    std::ostringstream os;
    os << "[campaign]\n";
    os << "models = " << model_path << "\n";
    os << "test_images = " << ti << "\ntest_labels = " << tl << "\n";
    os << "calib_images = " << ci << "\ncalib_labels = " << cl << "\n";
    os << "hardenings = baseline,ranger\n";  // micro-linear has no activation
                                                // sites: ranger degenerates to an
                                                // identity transform, still a cell
    os << "injectors = " << injectors << "\n";
    os << "margin = 0.35\n";               // tiny statistical n for the test
    os << "seed = 11\neval_subset = 12\njobs = 2\nout = " << out << "\n";
    os << "[app-neurons]\nruns = 6\nbler = 0.5\nner = 0.5\nbit = 30\n";
    os << "[app-weights-mbf]\nbers = 1e-3,1e-2\n";
    return os.str();
  }
};

}  // namespace

TEST_CASE("config parsing and validation") {
  const std::string good =
      "[campaign]\nmodels = m.fsnn\ntest_images = a\ntest_labels = b\n"
      "injectors = isa-fus\nseed = 3\nout = o\n# comment\nmargin = 0.02\n";
  camp::CampaignConfig c = camp::parse_config_text(good, "test");
  CHECK(c.model_paths == std::vector<std::string>{"m.fsnn"});
  CHECK(c.margin == 0.02);
  CHECK(c.seed == 3);
  CHECK(c.mbf_bridge);

  CHECK_THROWS_AS(camp::parse_config_text("[campaign]\nmodels = m\n", "t"), Error);
  CHECK_THROWS_AS(
      camp::parse_config_text(good + "typo_key = 1\n", "t"), Error);
  CHECK_THROWS_AS(
      camp::parse_config_text(
          "[campaign]\nmodels = m\ntest_images = a\ntest_labels = b\n"
          "injectors = isa-fus\nout = o\n",  // seed missing
          "t"),
      Error);
  // ranger without calibration data is a config error
  CHECK_THROWS_AS(
      camp::parse_config_text(
          "[campaign]\nmodels = m\ntest_images = a\ntest_labels = b\n"
          "injectors = isa-fus\nseed = 1\nout = o\nhardenings = ranger\n",
          "t"),
      Error);
}

TEST_CASE("outcome JSON round-trip including DUE NaN accuracy") {
  eval::RunOutcome o;
  o.run_id = "abc123";
  o.cell = "isa-regs";
  o.model = "m";
  o.hardening = "baseline";
  o.fault = "reg:R3:bit7:sa1";
  o.termination = eval::Termination::Trap;
  o.label = eval::Label::DUE;
  o.acc_golden = 0.9;
  o.acc_faulty = std::nan("");
  o.excitations = 17;
  o.uses = 90;
  o.induced_ber = 17.0 / 90.0;
  const std::string line = camp::outcome_to_json(o);
  eval::RunOutcome r = camp::outcome_from_json(line);
  CHECK(r.run_id == o.run_id);
  CHECK(r.label == eval::Label::DUE);
  CHECK(r.termination == eval::Termination::Trap);
  CHECK(std::isnan(r.acc_faulty));
  CHECK(r.excitations == 17);
  CHECK(camp::outcome_to_json(r) == line);  // stable serialization
}

TEST_CASE("run ids are stable and sensitive to every component") {
  const std::string a = camp::run_id(1, "isa-regs", "m/baseline", "reg:R1:bit0:sa0", 7);
  CHECK(a == camp::run_id(1, "isa-regs", "m/baseline", "reg:R1:bit0:sa0", 7));
  CHECK(a != camp::run_id(2, "isa-regs", "m/baseline", "reg:R1:bit0:sa0", 7));
  CHECK(a != camp::run_id(1, "isa-fus", "m/baseline", "reg:R1:bit0:sa0", 7));
  CHECK(a != camp::run_id(1, "isa-regs", "m/ranger", "reg:R1:bit0:sa0", 7));
  CHECK(a != camp::run_id(1, "isa-regs", "m/baseline", "reg:R1:bit1:sa0", 7));
  CHECK(a != camp::run_id(1, "isa-regs", "m/baseline", "reg:R1:bit0:sa0", 8));
}

TEST_CASE("mini campaign: counting, determinism, resume") {
  MiniWorld w;
  std::string cfg_text = w.config_text((w.dir / "out1").string(), "isa-fus,app-weights-sbf");
  const std::string cfg_path = (w.dir / "c1.ini").string();
  {
    std::ofstream f(cfg_path);
    f << cfg_text;
  }
  camp::CampaignConfig config = camp::parse_config(cfg_path);
  camp::CampaignReport rep = camp::run_campaign(config);

  // completeness: planned counts
  Model m = load_model(w.model_path);
  isa::Program p = isa::lower(m, Tensor({1, 28, 28}));
  const size_t isa_planned = isa::enumerate_fault_space(p, false, true).size();
  const size_t sbf_planned = app::stat_sample_size(app::weight_bit_population(m), 0.95,
                                                   config.margin, 0.5);
  // 2 hardenings x (exhaustive FU space + statistical SBF n)
  CHECK(rep.total_runs == 2 * (isa_planned + sbf_planned));
  CHECK(rep.new_runs == rep.total_runs);
  // 1 model x 2 hardenings x 2 injectors -> 4 distribution rows
  CHECK(rep.distribution.size() == 4);
  for (const auto& row : rep.distribution) {
    const auto& d = row.dist;
    CHECK(d.masked_pct + d.safe_sdc_pct + d.critical_sdc_pct + d.due_pct ==
          doctest::Approx(100.0).epsilon(1e-9));
  }

  // rerunning a completed campaign reuses every record byte-identically
  const std::string rec1 = slurp((w.dir / "out1" / "records.jsonl").string());
  camp::CampaignReport rep2 = camp::run_campaign(config);
  CHECK(rep2.new_runs == 0);
  CHECK(slurp((w.dir / "out1" / "records.jsonl").string()) == rec1);

  // determinism: a fresh out dir yields byte-identical records
  camp::CampaignConfig config2 = config;
  config2.out_dir = (w.dir / "out2").string();
  camp::run_campaign(config2);
  CHECK(slurp((w.dir / "out2" / "records.jsonl").string()) == rec1);

  // partial resume: truncate the records file, rerun, counts match and all
  // run ids stay unique
  camp::CampaignConfig config3 = config;
  config3.out_dir = (w.dir / "out3").string();
  camp::run_campaign(config3);
  const std::string rec_path3 = (w.dir / "out3" / "records.jsonl").string();
  {
    std::string full = slurp(rec_path3);
    size_t keep = full.find('\n');
    for (int i = 0; i < 30; ++i) keep = full.find('\n', keep + 1);
    std::ofstream f(rec_path3, std::ios::trunc);
    f << full.substr(0, keep + 1);
  }
  camp::CampaignReport rep3 = camp::run_campaign(config3);
  CHECK(rep3.total_runs == rep.total_runs);
  CHECK(rep3.new_runs == rep.total_runs - 31);
  std::set<std::string> ids;
  std::ifstream rf(rec_path3);
  std::string line;
  size_t lines = 0;
  while (std::getline(rf, line)) {
    if (line.empty()) continue;
    ids.insert(camp::outcome_from_json(line).run_id);
    ++lines;
  }
  CHECK(lines == rep.total_runs);
  CHECK(ids.size() == lines);  // no duplicate run ids after resume
}

TEST_CASE("report rendering: rankings and the divergence note") {
  // synthetic records: APP ranks {clipper > relu6}, ISA ranks {relu6 > clipper}
  const fs::path dir = fs::temp_directory_path() / "fsnn_report_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string rec_path = (dir / "records.jsonl").string();
  {
    std::ofstream f(rec_path);
    auto emit = [&](const std::string& cell, const std::string& hardening,
                    eval::Label label, int copies) {
      for (int i = 0; i < copies; ++i) {
        eval::RunOutcome o;
        o.run_id = cell + hardening + std::to_string(i) + eval::label_name(label);
        o.cell = cell;
        o.model = "m";
        o.hardening = hardening;
        o.fault = "x";
        o.label = label;
        o.acc_golden = 0.9;
        o.acc_faulty = label == eval::Label::CriticalSDC ? 0.2 : 0.9;
        f << camp::outcome_to_json(o) << "\n";
      }
    };
    // app-weights-sbf: clipper 10% critical, relu6 40%
    emit("app-weights-sbf", "clipper", eval::Label::CriticalSDC, 1);
    emit("app-weights-sbf", "clipper", eval::Label::Masked, 9);
    emit("app-weights-sbf", "relu6", eval::Label::CriticalSDC, 4);
    emit("app-weights-sbf", "relu6", eval::Label::Masked, 6);
    // isa-regs: clipper 50% critical, relu6 20%
    emit("isa-regs", "clipper", eval::Label::CriticalSDC, 5);
    emit("isa-regs", "clipper", eval::Label::Masked, 5);
    emit("isa-regs", "relu6", eval::Label::CriticalSDC, 2);
    emit("isa-regs", "relu6", eval::Label::Masked, 8);
  }
  camp::CampaignReport rep = camp::render_report(rec_path, (dir / "out").string());
  REQUIRE(!rep.rankings.empty());
  bool found_app = false, found_isa = false;
  for (const auto& rk : rep.rankings) {
    if (rk.metric != "critical_sdc") continue;
    if (rk.injector == "app-weights-sbf") {
      CHECK(rk.hardenings == std::vector<std::string>{"clipper", "relu6"});
      found_app = true;
    }
    if (rk.injector == "isa-regs") {
      CHECK(rk.hardenings == std::vector<std::string>{"relu6", "clipper"});
      found_isa = true;
    }
  }
  CHECK(found_app);
  CHECK(found_isa);
  REQUIRE(!rep.divergences.empty());
  CHECK(rep.divergences[0].find("model=m") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "distribution.csv"));
  CHECK(fs::exists(dir / "out" / "accuracy_by_ber.csv"));
  CHECK(fs::exists(dir / "out" / "summary.txt"));

  // single-injector records -> no divergence note entries
  const std::string rec2 = (dir / "single.jsonl").string();
  {
    std::ifstream in(rec_path);
    std::ofstream out2(rec2);
    std::string line;
    while (std::getline(in, line))
      if (line.find("app-weights-sbf") != std::string::npos) out2 << line << "\n";
  }
  camp::CampaignReport rep2 = camp::render_report(rec2, (dir / "out2").string());
  CHECK(rep2.divergences.empty());

  // all-masked records -> rankings tie, broken alphabetically
  const std::string rec3 = (dir / "masked.jsonl").string();
  {
    std::ofstream f(rec3);
    for (const char* h : {"relu6", "clipper", "ranger"}) {
      for (const char* cell : {"app-weights-sbf", "isa-regs"}) {
        eval::RunOutcome o;
        o.run_id = std::string(cell) + h;
        o.cell = cell;
        o.model = "m";
        o.hardening = h;
        o.fault = "x";
        o.label = eval::Label::Masked;
        o.acc_golden = o.acc_faulty = 0.9;
        f << camp::outcome_to_json(o) << "\n";
      }
    }
  }
  camp::CampaignReport rep3 = camp::render_report(rec3, (dir / "out3").string());
  for (const auto& rk : rep3.rankings) {
    if (rk.metric == "critical_sdc")
      CHECK(rk.hardenings == std::vector<std::string>{"clipper", "ranger", "relu6"});
  }
  CHECK(rep3.divergences.empty());
  fs::remove_all(dir);
}
