#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsnn/appfi.hpp"
#include "fsnn/evaluate.hpp"
#include "fsnn/harden.hpp"
#include "fsnn/isa.hpp"
#include "fsnn/model.hpp"
#include "fsnn/vm.hpp"

namespace fsnn::camp {

// Declarative experiment description parsed from an INI-style text file:
// sections in brackets, key = value lines, '#' comments. One campaign runs
// the full matrix (models x hardenings x injectors) and renders the
// comparison artifacts.
struct CampaignConfig {
  std::vector<std::string> model_paths;
  std::string test_images, test_labels;
  std::string calib_images, calib_labels;  // hardening calibration
  std::vector<std::string> hardenings;     // baseline | ranger | clipper | relu6
  std::vector<std::string> injectors;      // app-weights-sbf | app-weights-mbf |
                                           // app-neurons | isa-regs | isa-fus
  double confidence = 0.95;
  double margin = 0.005;
  double prior_p = 0.5;
  std::vector<double> mbf_bers;  // empty = "bridge" mode
  bool mbf_bridge = true;
  double neuron_bler = 0.1, neuron_ner = 0.1;
  uint32_t neuron_bit = 30;
  uint32_t neuron_runs = 200;
  double clipper_percentile = 99.9;
  uint64_t seed = 1;
  size_t eval_subset = 1000;
  uint32_t jobs = 1;
  uint32_t watchdog_mult = 10;
  std::string out_dir;

  uint64_t config_hash = 0;  // of the raw config text
};

CampaignConfig parse_config(const std::string& path);
CampaignConfig parse_config_text(const std::string& text, const std::string& origin);

struct Ranking {
  std::string model;
  std::string injector;
  std::string metric;                   // "critical_sdc" | "mean_accuracy"
  std::vector<std::string> hardenings;  // best first, ties alphabetical
};

struct RadRow {
  std::string model, injector, hardening;
  double mean_rad;  // over non-DUE runs, per the (golden - faulty)/golden form
  size_t runs;
};

struct CampaignReport {
  std::vector<eval::DistributionRow> distribution;
  std::vector<eval::AccuracyRow> accuracy;
  std::vector<RadRow> rad;
  std::vector<Ranking> rankings;
  std::vector<std::string> divergences;  // APP vs ISA ranking disagreements
  std::map<std::string, eval::BerBridge> bridges;  // per "model/hardening"
  std::string provenance;
  size_t total_runs = 0;
  size_t new_runs = 0;  // executed this invocation (0 on a fully resumed rerun)
};

// Executes the matrix: (1) exhaustive ISA campaigns per model x hardening,
// (2) BER bridge, (3) APP campaigns (SBF statistically sized, MBF at
// bridge/explicit BERs, neuron runs), (4) classification/aggregation,
// (5) report emission. Records are appended to <out>/records.jsonl as runs
// complete (deterministic order); completed run IDs are skipped on
// re-invocation.
CampaignReport run_campaign(const CampaignConfig& config);

// Rebuild the report files from an existing records file.
CampaignReport render_report(const std::string& records_path, const std::string& out_dir);

// Record (de)serialization, one JSON object per line.
std::string outcome_to_json(const eval::RunOutcome& o);
eval::RunOutcome outcome_from_json(const std::string& line);

// Deterministic run identifier: stable hash of (config hash, cell,
// model/hardening, fault description, seed).
std::string run_id(uint64_t config_hash, const std::string& cell, const std::string& variant,
                   const std::string& fault, uint64_t seed);

// Shared ISA-campaign machinery (also used by the CLI and the acceptance
// harness): one lowered program, the golden logits/confidences and
// accumulated golden-trace site statistics over a fixed evaluation subset.
struct IsaEvalContext {
  isa::Program program;
  std::vector<Tensor> images;
  std::vector<uint32_t> labels;
  Tensor golden_logits;
  Tensor golden_conf;
  double acc_golden = 0;
  isa::SiteStats stats;
  uint64_t watchdog = 0;
};

IsaEvalContext build_isa_context(const Model& m, const Dataset& subset, uint32_t mult);

// One exhaustive-fault run over the subset; DUE short-circuits on the first
// trapped or hung image (the fault is permanent).
eval::RunOutcome run_isa_spec(const IsaEvalContext& ctx, isa::Machine& machine,
                              const isa::IsaFaultSpec& spec, const std::string& cell,
                              const std::string& model, const std::string& hardening);

}  // namespace fsnn::camp
