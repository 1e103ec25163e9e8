// faultscope: train / harden / inject-app / inject-isa / campaign / report
// plus dataset utilities (synth-data) so the pipeline is self-contained.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fsnn/campaign.hpp"
#include "fsnn/harden.hpp"
#include "fsnn/io.hpp"
#include "fsnn/kernels.hpp"
#include "fsnn/synth.hpp"
#include "fsnn/train.hpp"
#include "fsnn/vm.hpp"

using namespace fsnn;

namespace {

Dataset load_dataset(const std::string& images, const std::string& labels) {
  if (labels.empty() && images.size() > 4 && images.substr(images.size() - 4) == ".csv")
    return load_csv_dataset(images);
  return load_mnist_idx(images, labels);
}

int cmd_train(const std::string& arch, const std::string& images, const std::string& labels,
              const std::string& out, const TrainHyper& hyper) {
  Model m = build_model(arch, hyper.seed);
  Dataset ds = load_dataset(images, labels);
  ds.split = "train";
  std::cout << "training " << arch << " on " << ds.size() << " samples, epochs="
            << hyper.epochs << " lr=" << hyper.lr << " batch=" << hyper.batch_size
            << " seed=" << hyper.seed << "\n";
  Model trained = train(m, ds, hyper);
  trained.meta.notes += "train: arch=" + arch + " epochs=" + std::to_string(hyper.epochs) +
                        " lr=" + std::to_string(hyper.lr) +
                        " batch=" + std::to_string(hyper.batch_size) +
                        " seed=" + std::to_string(hyper.seed) + "\n";
  save_model(trained, out);
  std::cout << "train-set accuracy: " << accuracy(trained, ds) << "\n";
  std::cout << "saved " << out << "\n";
  return 0;
}

int cmd_harden(const std::string& model_path, const std::string& technique,
               const std::string& calib_images, const std::string& calib_labels,
               double percentile, uint32_t finetune_epochs, const std::string& out) {
  Model m = load_model(model_path);
  std::optional<Dataset> calib;
  if (!calib_images.empty()) {
    calib = load_dataset(calib_images, calib_labels);
    calib->split = "calibration";
  }
  std::optional<TrainHyper> finetune;
  if (finetune_epochs > 0) {
    TrainHyper h;
    h.epochs = finetune_epochs;
    h.lr = 0.01f;
    h.seed = 1;
    finetune = h;
  }
  Model hardened = [&]() {
    if (technique == "ranger") {
      check(calib.has_value(), Err::BadArgument, "ranger needs --calib");
      return apply_ranger(m, profile_ranges(m, *calib));
    }
    if (technique == "clipper") {
      check(calib.has_value(), Err::BadArgument, "clipper needs --calib");
      return apply_adaptive_clipper(m, *calib, percentile, finetune,
                                    calib ? &*calib : nullptr);
    }
    if (technique == "relu6")
      return apply_swap_relu6(m, finetune, calib ? &*calib : nullptr);
    fail(Err::BadArgument, "unknown technique " + technique);
  }();
  save_model(hardened, out);
  std::ofstream manifest(out + ".manifest.txt");
  manifest << hardening_manifest(hardened);
  std::cout << "saved " << out << " (+ manifest)\n";
  return 0;
}

int cmd_inject_app(const std::string& model_path, const std::string& images,
                   const std::string& labels, const std::string& target,
                   const std::string& mode, std::vector<double> bers, double bler, double ner,
                   uint32_t bit, double confidence, double margin, uint64_t seed,
                   size_t eval_subset, uint32_t runs, int layer, const std::string& out) {
  Model m = load_model(model_path);
  Dataset ds = load_dataset(images, labels);

  app::AppFaultSpec spec;
  spec.target = target == "weights" ? app::Target::Weight : app::Target::Neuron;
  spec.mode = mode == "mbf" ? app::Mode::MBF : app::Mode::SBF;
  spec.bler = bler;
  spec.ner = ner;
  spec.bit = bit;
  spec.layer_filter = layer;
  spec.seed = seed;

  app::StatSizing sizing;
  sizing.confidence = confidence;
  sizing.margin = margin;

  app::CampaignParams params;
  params.seed = seed;
  params.eval_subset = eval_subset;
  params.neuron_runs = runs;
  params.mbf_bers = std::move(bers);

  auto outcomes = app::run_app_campaign(m, ds, spec, sizing, params);
  std::ofstream f(out, std::ios::app);
  check(f.good(), Err::IoError, "cannot open " + out);
  for (const auto& o : outcomes) f << camp::outcome_to_json(o) << "\n";
  std::cout << outcomes.size() << " runs appended to " << out << "\n";
  return 0;
}

int cmd_inject_isa(const std::string& model_path, const std::string& images,
                   const std::string& labels, const std::string& target, bool exhaustive,
                   const std::string& fault_str, uint32_t watchdog_mult, size_t eval_subset,
                   bool dump_asm, bool trace, const std::string& out) {
  Model m = load_model(model_path);
  Dataset ds = load_dataset(images, labels);
  const Dataset subset = ds.subset(0, std::min(eval_subset, ds.size()));
  isa::Program p = isa::lower(m, subset.sample(0));
  if (dump_asm) {
    std::cout << isa::disassemble(p);
    if (!exhaustive && fault_str.empty()) return 0;
  }
  if (trace) {
    isa::Machine machine(p);
    machine.set_input(subset.sample(0));
    machine.run_traced([](uint64_t cyc, char kind, uint8_t site, uint8_t fu, uint32_t bits) {
      std::printf("%llu %c %u %u %08x\n", static_cast<unsigned long long>(cyc), kind, site,
                  fu, bits);
    });
    return 0;
  }

  std::vector<isa::IsaFaultSpec> specs;
  if (exhaustive) {
    specs = isa::enumerate_fault_space(p, target != "fus", target != "regs");
  } else {
    check(!fault_str.empty(), Err::BadArgument, "need --exhaustive or --fault");
    specs.push_back(isa::IsaFaultSpec::parse(fault_str));
  }

  camp::IsaEvalContext ctx = camp::build_isa_context(m, subset, watchdog_mult);
  isa::Machine machine(ctx.program);
  std::ofstream f(out, std::ios::app);
  check(f.good(), Err::IoError, "cannot open " + out);
  size_t done = 0;
  for (const auto& spec : specs) {
    const std::string cell = std::string("isa-") +
        (spec.kind == isa::IsaFaultSpec::Kind::RegisterBit ? "regs" : "fus");
    eval::RunOutcome o = camp::run_isa_spec(ctx, machine, spec, cell, m.meta.name,
                                            hardening_name(m.meta.hardening));
    o.run_id = hex64(fnv1a64(o.fault) ^ fnv1a64(model_path));
    f << camp::outcome_to_json(o) << "\n";
    if (++done % 200 == 0) std::cout << done << "/" << specs.size() << " specs\n";
  }
  std::cout << specs.size() << " runs appended to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"DNN hardening evaluation under permanent faults: app-level and "
               "instruction-level injection"};
  cli.require_subcommand(1);

  std::string kernels = "auto";
  cli.add_option("--kernels", kernels, "kernel backend: auto|scalar|avx2");

  // train
  auto* t = cli.add_subcommand("train", "train a model");
  std::string t_arch = "lenet-desk", t_images, t_labels, t_out = "model.fsnn";
  TrainHyper t_hyper;
  t->add_option("--arch", t_arch, "lenet-desk|micro-linear|micro-conv|resnet-mini|dwnet-mini");
  t->add_option("--images", t_images)->required();
  t->add_option("--labels", t_labels)->required();
  t->add_option("--out", t_out);
  t->add_option("--epochs", t_hyper.epochs);
  t->add_option("--lr", t_hyper.lr);
  t->add_option("--lr-decay", t_hyper.lr_decay);
  t->add_option("--batch", t_hyper.batch_size);
  t->add_option("--seed", t_hyper.seed);

  // harden
  auto* h = cli.add_subcommand("harden", "apply a SW hardening transform");
  std::string h_model, h_technique, h_calib_images, h_calib_labels, h_out = "hardened.fsnn";
  double h_percentile = 99.9;
  uint32_t h_finetune = 0;
  h->add_option("--model", h_model)->required();
  h->add_option("--technique", h_technique, "ranger|clipper|relu6")->required();
  h->add_option("--calib", h_calib_images, "calibration images (IDX or CSV)");
  h->add_option("--calib-labels", h_calib_labels);
  h->add_option("--percentile", h_percentile);
  h->add_option("--finetune-epochs", h_finetune);
  h->add_option("--out", h_out);

  // inject-app
  auto* ia = cli.add_subcommand("inject-app", "application-level fault injection");
  std::string ia_model, ia_images, ia_labels, ia_target = "weights", ia_mode = "sbf",
              ia_out = "app_records.jsonl";
  std::vector<double> ia_bers;
  double ia_bler = 0.1, ia_ner = 0.1, ia_conf = 0.95, ia_margin = 0.005;
  uint32_t ia_bit = 30, ia_runs = 200;
  uint64_t ia_seed = 1;
  size_t ia_subset = 1000;
  int ia_layer = -1;
  ia->add_option("--model", ia_model)->required();
  ia->add_option("--images", ia_images)->required();
  ia->add_option("--labels", ia_labels)->required();
  ia->add_option("--target", ia_target, "weights|neurons");
  ia->add_option("--mode", ia_mode, "sbf|mbf");
  ia->add_option("--ber", ia_bers, "MBF bit error rate(s)");
  ia->add_option("--bler", ia_bler);
  ia->add_option("--ner", ia_ner);
  ia->add_option("--bit", ia_bit);
  ia->add_option("--confidence", ia_conf);
  ia->add_option("--margin", ia_margin);
  ia->add_option("--seed", ia_seed);
  ia->add_option("--eval-subset", ia_subset);
  ia->add_option("--runs", ia_runs, "neuron campaign run count");
  ia->add_option("--layer", ia_layer, "restrict neuron faults to one layer");
  ia->add_option("--out", ia_out);

  // inject-isa
  auto* ii = cli.add_subcommand("inject-isa", "instruction-level stuck-at injection");
  std::string ii_model, ii_images, ii_labels, ii_target = "regs", ii_fault,
              ii_out = "isa_records.jsonl";
  bool ii_exhaustive = false, ii_dump = false, ii_trace = false;
  uint32_t ii_mult = 10;
  size_t ii_subset = 1000;
  ii->add_option("--model", ii_model)->required();
  ii->add_option("--images", ii_images)->required();
  ii->add_option("--labels", ii_labels)->required();
  ii->add_option("--target", ii_target, "regs|fus|both");
  ii->add_flag("--exhaustive", ii_exhaustive);
  ii->add_option("--fault", ii_fault, "e.g. reg:R7:bit12:sa1 or fu:fma:out:bit30:sa1");
  ii->add_option("--watchdog-mult", ii_mult);
  ii->add_option("--eval-subset", ii_subset);
  ii->add_flag("--dump-asm", ii_dump, "print program disassembly");
  ii->add_flag("--trace", ii_trace, "emit per-cycle site-use records (fault-free)");
  ii->add_option("--out", ii_out);

  // campaign
  auto* c = cli.add_subcommand("campaign", "run a full experiment matrix");
  std::string c_config, c_out;
  uint32_t c_jobs = 0;
  uint64_t c_seed = 0;
  bool c_resume = false;
  c->add_option("--config", c_config)->required();
  c->add_option("--out", c_out, "override output directory");
  c->add_option("--jobs", c_jobs, "override parallelism degree");
  c->add_option("--seed", c_seed, "override seed");
  c->add_flag("--resume", c_resume, "skip runs already in the records file");

  // report
  auto* r = cli.add_subcommand("report", "render report files from records");
  std::string r_records, r_out = ".";
  r->add_option("--records", r_records)->required();
  r->add_option("--out", r_out);

  // synth-data (dataset utility; MNIST files are used directly when present)
  auto* s = cli.add_subcommand("synth-data", "emit a synthetic digit dataset as IDX");
  std::string s_images = "train-images-idx3-ubyte", s_labels = "train-labels-idx1-ubyte";
  uint32_t s_n = 10000;
  uint64_t s_seed = 1;
  std::string s_split = "train";
  s->add_option("--n", s_n);
  s->add_option("--seed", s_seed);
  s->add_option("--split", s_split);
  s->add_option("--out-images", s_images);
  s->add_option("--out-labels", s_labels);

  CLI11_PARSE(cli, argc, argv);

  try {
    if (kernels == "scalar") kern::select(kern::Backend::Scalar);
    if (kernels == "avx2") kern::select(kern::Backend::Avx2);

    if (cli.got_subcommand(t))
      return cmd_train(t_arch, t_images, t_labels, t_out, t_hyper);
    if (cli.got_subcommand(h))
      return cmd_harden(h_model, h_technique, h_calib_images, h_calib_labels, h_percentile,
                        h_finetune, h_out);
    if (cli.got_subcommand(ia))
      return cmd_inject_app(ia_model, ia_images, ia_labels, ia_target, ia_mode, ia_bers,
                            ia_bler, ia_ner, ia_bit, ia_conf, ia_margin, ia_seed, ia_subset,
                            ia_runs, ia_layer, ia_out);
    if (cli.got_subcommand(ii))
      return cmd_inject_isa(ii_model, ii_images, ii_labels, ii_target, ii_exhaustive,
                            ii_fault, ii_mult, ii_subset, ii_dump, ii_trace, ii_out);
    if (cli.got_subcommand(c)) {
      camp::CampaignConfig config = camp::parse_config(c_config);
      if (!c_out.empty()) config.out_dir = c_out;
      if (c_jobs > 0) config.jobs = c_jobs;
      if (c_seed != 0) config.seed = c_seed;
      if (!c_resume) {
        // a fresh (non-resumed) campaign must not silently reuse stale records
        const std::string rp = config.out_dir + "/records.jsonl";
        check(!std::filesystem::exists(rp), Err::ConfigError,
              rp + " exists; pass --resume to continue it or remove it");
      }
      auto rep = camp::run_campaign(config);
      std::cout << "campaign complete: " << rep.total_runs << " runs (" << rep.new_runs
                << " new), report in " << config.out_dir << "\n";
      for (const auto& d : rep.divergences) std::cout << "divergence: " << d << "\n";
      return 0;
    }
    if (cli.got_subcommand(r)) {
      camp::render_report(r_records, r_out);
      std::cout << "report written to " << r_out << "\n";
      return 0;
    }
    if (cli.got_subcommand(s)) {
      Dataset ds = synth_digits(s_n, s_seed, s_split);
      write_idx_images(s_images, ds.images);
      write_idx_labels(s_labels, ds.labels);
      std::cout << "wrote " << s_n << " samples to " << s_images << " / " << s_labels << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
