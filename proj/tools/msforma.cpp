// msforma command line: mass decomposition, vocabulary building, synthetic
// corpora, spectrum prediction, assignment-cosine scoring and spectral
// library search behind one binary.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "msforma/decomp.hpp"
#include "msforma/search.hpp"
#include "msforma/simulate.hpp"

namespace {

constexpr const char* kVersion =
    "msforma 0.1.0 (formats: weights v1, vocab-tsv v1, library v1)";

int g_verbosity = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
  if (g_verbosity >= 1) std::cerr << "[msforma] " << msg << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) msforma::fail("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) msforma::fail("error while reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) msforma::fail("cannot open file '" + path + "' for writing");
  out << data;
  if (!out.good()) msforma::fail("error while writing '" + path + "'");
}

void emit(const std::string& out_path, const std::string& data) {
  if (out_path.empty()) std::cout << data;
  else write_file(out_path, data);
}

std::vector<msforma::SpectrumRecord> read_spectra(const std::string& path) {
  std::string text = read_file(path);
  std::size_t i = 0;
  while (i < text.size() && (text[i] == '\n' || text[i] == '\r' || text[i] == ' ')) ++i;
  if (text.compare(i, 10, "BEGIN IONS") == 0) return msforma::parse_mgf(text);
  return msforma::parse_msp(text);
}

// Normalizes and, when needed, annotates a corpus by mass decomposition.
std::vector<msforma::SpectrumRecord> prepare_corpus(const std::string& path, double ppm,
                                                    unsigned threads) {
  auto records = read_spectra(path);
  msforma::DecompConfig dc;
  dc.epsilon_ppm = ppm;
  std::size_t annotated = 0;
  msforma::parallel_for(records.size(), threads, [&](std::size_t i) {
    records[i] = msforma::normalize(records[i]);
    if (!records[i].has_annotations()) records[i] = msforma::annotate_spectrum(records[i], dc);
  });
  for (const auto& r : records)
    if (r.has_annotations()) ++annotated;
  info("loaded " + std::to_string(records.size()) + " spectra from '" + path + "' (" +
       std::to_string(annotated) + " with annotations)");
  return records;
}

struct GlobalFlags {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::string log_level = "info";
};

// ----------------------------------------------------------- subcommands --

int cmd_elements(const std::string& out) {
  emit(out, msforma::ElementTable::instance().to_tsv());
  return 0;
}

int cmd_decompose(double mz, const std::string& precursor, double ppm) {
  msforma::DecompConfig cfg;
  cfg.epsilon_ppm = ppm;
  auto results = msforma::decompose(mz, msforma::parse_formula(precursor), cfg);
  std::string out;
  for (const auto& f : results) {
    double err_ppm = (msforma::monoisotopic_mass(f) - mz) / mz * 1e6;
    out += msforma::format_formula(f) + "\t" + msforma::format_fixed(err_ppm, 4) + "\n";
  }
  std::cout << out;
  info(std::to_string(results.size()) + " formulas within " + msforma::format_sig9(ppm) + " ppm");
  return 0;
}

int cmd_simulate(const GlobalFlags& g, const std::string& structures_path, std::uint64_t seed,
                 int max_cuts, double noise_ppm, double temperature, const std::string& out) {
  auto rows = msforma::read_structure_table(read_file(structures_path));
  msforma::SimConfig cfg;
  cfg.seed = seed;
  cfg.max_cuts = max_cuts;
  cfg.noise_ppm = noise_ppm;
  cfg.height_temperature = temperature;
  auto corpus = msforma::generate_corpus(rows, cfg, g.threads);
  for (const auto& [row, msg] : corpus.failures)
    std::cerr << "[msforma] structure row " << row << " failed: " << msg << "\n";
  emit(out, msforma::write_msp(corpus.records));
  info("simulated " + std::to_string(corpus.records.size()) + " spectra (" +
       std::to_string(corpus.failures.size()) + " failures)");
  return 0;
}

msforma::VocabMode parse_mode(const std::string& mode) {
  if (mode == "mixed") return msforma::VocabMode::Mixed;
  if (mode == "products") return msforma::VocabMode::ProductsOnly;
  if (mode == "losses") return msforma::VocabMode::LossesOnly;
  msforma::fail("unknown vocabulary mode '" + mode + "' (expected mixed|products|losses)");
}

int cmd_build_vocab(const GlobalFlags& g, const std::string& in, long k, double ppm,
                    const std::string& mode, const std::string& out) {
  auto corpus = prepare_corpus(in, ppm, g.threads);
  auto vocab = msforma::build_vocabulary(corpus, k, parse_mode(mode));
  emit(out, msforma::save_vocabulary(vocab));
  info("vocabulary of " + std::to_string(vocab.size()) + " entries (" +
       std::to_string(vocab.products().size()) + " products, " +
       std::to_string(vocab.losses().size()) + " losses)");
  return 0;
}

int cmd_coverage(const GlobalFlags& g, const std::string& vocab_path, const std::string& in,
                 double ppm, const std::string& curve_out) {
  auto vocab = msforma::load_vocabulary(read_file(vocab_path));
  auto corpus = prepare_corpus(in, ppm, g.threads);
  auto report = msforma::coverage(vocab, corpus);
  std::cout << "mean_coverage," << msforma::format_sig9(report.mean) << "\n";
  if (!curve_out.empty()) {
    std::string csv = "k,coverage\n";
    for (std::size_t j = 0; j < report.curve.size(); ++j)
      csv += std::to_string(j + 1) + "," + msforma::format_sig9(report.curve[j]) + "\n";
    write_file(curve_out, csv);
  }
  return 0;
}

std::vector<msforma::TrainingRecord> to_training_records(
    std::vector<msforma::SpectrumRecord> corpus) {
  std::vector<msforma::TrainingRecord> out;
  out.reserve(corpus.size());
  for (auto& rec : corpus) {
    if (rec.smiles.empty())
      msforma::fail("record '" + rec.id + "' has no Smiles header; training needs structures");
    msforma::TrainingRecord tr;
    tr.graph = msforma::parse_smiles(rec.smiles);
    tr.spectrum = std::move(rec);
    out.push_back(std::move(tr));
  }
  return out;
}

int cmd_train(const GlobalFlags& g, const std::string& in, const std::string& vocab_path,
              double ppm, msforma::TrainConfig cfg, const std::string& out) {
  auto vocab = msforma::load_vocabulary(read_file(vocab_path));
  auto training = to_training_records(prepare_corpus(in, ppm, g.threads));
  msforma::TrainLog log;
  auto weights = msforma::train(training, vocab, cfg, &log);
  if (g_verbosity >= 2) {
    for (std::size_t e = 0; e < log.train_loss.size(); ++e) {
      std::cerr << "[msforma] epoch " << e << " train " << log.train_loss[e];
      if (e < log.val_loss.size()) std::cerr << " val " << log.val_loss[e];
      std::cerr << "\n";
    }
  }
  if (!log.train_loss.empty())
    info("final train PMCE " + msforma::format_sig9(log.train_loss.back()) +
         (log.best_epoch >= 0 ? " (best epoch " + std::to_string(log.best_epoch) + ")" : ""));
  write_file(out, msforma::save_weights(weights));
  return 0;
}

int cmd_predict(const std::string& smiles, const std::string& model_path,
                const std::string& vocab_path, const std::string& energies, double nce,
                const std::string& type, const std::string& instrument, bool isotopes,
                const std::string& out) {
  auto vocab = msforma::load_vocabulary(read_file(vocab_path));
  auto weights = msforma::load_weights(read_file(model_path), vocab);
  auto graph = msforma::parse_smiles(smiles);

  msforma::Covariates cov;
  cov.precursor_type = msforma::parse_precursor_type(type);
  cov.instrument = msforma::parse_instrument(instrument);
  cov.has_isotopic_peaks = isotopes;

  std::vector<double> energy_list;
  if (!energies.empty()) {
    for (auto tok : msforma::split(energies, ','))
      energy_list.push_back(msforma::parse_double(msforma::trim(tok), "energy"));
    if (energy_list.empty()) msforma::fail("--energies given but empty");
  } else {
    energy_list.push_back(nce);
  }

  // Mean of the per-energy predictions; the candidate grid is identical
  // across energies, so probabilities average cell by cell.
  std::map<std::tuple<msforma::Formula, int, int>, msforma::PredictedEntry> merged;
  for (double e : energy_list) {
    cov.collision_energy = e;
    auto pred = msforma::predict(graph, cov, vocab, weights);
    for (const auto& entry : pred.entries) {
      auto key = std::make_tuple(entry.formula, static_cast<int>(entry.adduct), entry.isotope);
      auto [it, inserted] = merged.try_emplace(key, entry);
      if (!inserted) it->second.probability += entry.probability;
    }
  }
  msforma::PredictedSpectrum mean_pred;
  mean_pred.precursor = msforma::precursor_formula(graph, cov.precursor_type);
  for (auto& [key, entry] : merged) {
    entry.probability /= static_cast<double>(energy_list.size());
    mean_pred.entries.push_back(entry);
  }
  std::sort(mean_pred.entries.begin(), mean_pred.entries.end(),
            [](const auto& a, const auto& b) { return a.mz < b.mz; });

  cov.collision_energy = energy_list.size() == 1 ? energy_list[0] : nce;
  auto record = msforma::predicted_to_record(mean_pred, "prediction", cov, smiles);
  emit(out, msforma::write_msp({record}));
  return 0;
}

int cmd_score(const std::string& a_path, const std::string& b_path, double tau,
              const std::string& out) {
  auto a = read_spectra(a_path);
  auto b = read_spectra(b_path);
  msforma::MatchConfig cfg{tau};
  std::string csv = "id_a,id_b,cosine,n_matched\n";
  for (const auto& ra : a)
    for (const auto& rb : b) {
      auto r = msforma::cosine_similarity(ra, rb, cfg);
      csv += ra.id + "," + rb.id + "," + msforma::format_sig9(r.score) + "," +
             std::to_string(r.matches.size()) + "\n";
    }
  emit(out, csv);
  return 0;
}

int cmd_build_library(const GlobalFlags& g, const std::string& structures_path,
                      const std::string& model_path, const std::string& vocab_path,
                      const std::string& out) {
  auto vocab = msforma::load_vocabulary(read_file(vocab_path));
  auto weights = msforma::load_weights(read_file(model_path), vocab);
  auto rows = msforma::read_structure_table(read_file(structures_path));
  auto result = msforma::build_library(rows, vocab, weights, g.threads);
  for (const auto& [row, msg] : result.failures)
    std::cerr << "[msforma] structure row " << row << " failed: " << msg << "\n";
  write_file(out, msforma::save_library(result.library));
  info("library of " + std::to_string(result.library.entries.size()) + " entries (" +
       std::to_string(result.failures.size()) + " failures)");
  return 0;
}

int cmd_search(const GlobalFlags& g, const std::string& lib_path, const std::string& query_path,
               double tau, double precursor_ppm, std::size_t top, const std::string& out) {
  auto lib = msforma::load_library(read_file(lib_path));
  auto queries = read_spectra(query_path);
  msforma::SearchConfig cfg;
  cfg.match.tau = tau;
  cfg.precursor_window_ppm = precursor_ppm;

  std::vector<std::string> blocks(queries.size());
  msforma::parallel_for(queries.size(), g.threads, [&](std::size_t i) {
    auto hits = msforma::search(queries[i], lib, cfg, top);
    std::string s;
    for (std::size_t r = 0; r < hits.size(); ++r)
      s += queries[i].id + "," + std::to_string(r + 1) + "," + hits[r].id + "," +
           msforma::format_sig9(hits[r].score) + "," + std::to_string(hits[r].n_matched) + "\n";
    blocks[i] = std::move(s);
  });
  std::string csv = "query_id,rank,entry_id,cosine,n_matched\n";
  for (const auto& b : blocks) csv += b;
  emit(out, csv);
  return 0;
}

int cmd_eval(const GlobalFlags& g, const std::string& lib_path, const std::string& queries_path,
             double tau, double precursor_ppm, const std::string& out) {
  auto lib = msforma::load_library(read_file(lib_path));
  auto records = read_spectra(queries_path);
  std::vector<std::pair<std::string, msforma::SpectrumRecord>> queries;
  queries.reserve(records.size());
  for (auto& r : records) queries.emplace_back(r.id, std::move(r));

  msforma::SearchConfig cfg;
  cfg.match.tau = tau;
  cfg.precursor_window_ppm = precursor_ppm;
  auto m = msforma::evaluate_retrieval(queries, lib, cfg, g.threads);

  std::string csv = "metric,value\n";
  csv += "recall@1," + msforma::format_sig9(m.recall_at_1) + "\n";
  csv += "recall@5," + msforma::format_sig9(m.recall_at_5) + "\n";
  csv += "recall@10," + msforma::format_sig9(m.recall_at_10) + "\n";
  csv += "mean_cosine," + msforma::format_sig9(m.mean_cosine) + "\n";
  csv += "frac_above_0.7," + msforma::format_sig9(m.frac_above_0_7) + "\n";
  emit(out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"formula-space tandem mass spectrometry toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--threads", g.threads, "worker threads for batch subcommands (0 = all cores)");
  app.add_option("--seed", g.seed, "seed for randomized subcommands");
  app.add_option("--log-level", g.log_level, "quiet|info|debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  // elements
  auto* elements = app.add_subcommand("elements", "export the element mass table as TSV");
  std::string elements_out;
  elements->add_option("--out", elements_out, "output path (default stdout)");

  // decompose
  auto* dec = app.add_subcommand("decompose", "enumerate subformulas matching an m/z");
  double dec_mz = 0, dec_ppm = 10.0;
  std::string dec_precursor;
  dec->add_option("--mz", dec_mz, "target m/z in Da")->required();
  dec->add_option("--precursor", dec_precursor, "precursor ion formula")->required();
  dec->add_option("--ppm", dec_ppm, "relative tolerance in ppm");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic annotated corpus");
  std::string sim_structures, sim_out;
  int sim_max_cuts = 2;
  double sim_noise = 0.0, sim_temp = 1.0;
  sim->add_option("--structures", sim_structures, "structure table (TSV)")->required();
  sim->add_option("--out", sim_out, "output MSP path (default stdout)");
  sim->add_option("--max-cuts", sim_max_cuts, "maximum simultaneous bond cuts");
  sim->add_option("--noise-ppm", sim_noise, "m/z jitter in ppm");
  sim->add_option("--temperature", sim_temp, "height weighting temperature");

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "learn the fixed formula vocabulary");
  std::string bv_in, bv_out, bv_mode = "mixed";
  long bv_k = 10000;
  double bv_ppm = 10.0;
  bv->add_option("--in", bv_in, "annotated corpus (MSP)")->required();
  bv->add_option("--k", bv_k, "vocabulary size");
  bv->add_option("--ppm", bv_ppm, "decomposition tolerance when annotating");
  bv->add_option("--mode", bv_mode, "mixed|products|losses");
  bv->add_option("--out", bv_out, "output vocabulary TSV (default stdout)");

  // coverage
  auto* cov = app.add_subcommand("coverage", "explained-signal coverage of a vocabulary");
  std::string cov_vocab, cov_in, cov_curve;
  double cov_ppm = 10.0;
  cov->add_option("--vocab", cov_vocab, "vocabulary TSV")->required();
  cov->add_option("--in", cov_in, "annotated corpus (MSP)")->required();
  cov->add_option("--ppm", cov_ppm, "decomposition tolerance when annotating");
  cov->add_option("--curve", cov_curve, "write the coverage-vs-K curve CSV here");

  // train
  auto* tr = app.add_subcommand("train", "fit the spectrum predictor");
  std::string tr_in, tr_vocab, tr_out;
  double tr_ppm = 10.0;
  msforma::TrainConfig tr_cfg;
  tr->add_option("--in", tr_in, "annotated corpus with Smiles headers (MSP)")->required();
  tr->add_option("--vocab", tr_vocab, "vocabulary TSV")->required();
  tr->add_option("--out", tr_out, "output weights file")->required();
  tr->add_option("--ppm", tr_ppm, "decomposition tolerance when annotating");
  tr->add_option("--epochs", tr_cfg.epochs, "training epochs");
  tr->add_option("--batch", tr_cfg.batch_size, "mini-batch size");
  tr->add_option("--lr", tr_cfg.learning_rate, "learning rate");
  tr->add_option("--val-fraction", tr_cfg.validation_fraction, "held-out fraction");
  tr->add_option("--fp-bits", tr_cfg.features.fingerprint_bits, "fingerprint width");
  tr->add_option("--fp-radius", tr_cfg.features.fingerprint_radius, "fingerprint radius");

  // predict
  auto* pr = app.add_subcommand("predict", "predict a spectrum for a structure");
  std::string pr_smiles, pr_model, pr_vocab, pr_energies, pr_out;
  std::string pr_type = "[M+H]+", pr_instrument = "orbitrap_fusion_lumos";
  double pr_nce = 35.0;
  bool pr_isotopes = false;
  pr->add_option("--smiles", pr_smiles, "structure SMILES")->required();
  pr->add_option("--model", pr_model, "weights file")->required();
  pr->add_option("--vocab", pr_vocab, "vocabulary TSV")->required();
  pr->add_option("--nce", pr_nce, "normalized collision energy");
  pr->add_option("--energies", pr_energies, "comma list; emit the mean prediction");
  pr->add_option("--type", pr_type, "[M+H]+ or [M-H]-");
  pr->add_option("--instrument", pr_instrument, "instrument model");
  pr->add_flag("--isotopes", pr_isotopes, "enable isotopic peak states");
  pr->add_option("--out", pr_out, "output MSP path (default stdout)");

  // score
  auto* sc = app.add_subcommand("score", "assignment-cosine scores between two spectrum files");
  std::string sc_a, sc_b, sc_out;
  double sc_tau = 0.05;
  sc->add_option("--a", sc_a, "first spectrum file")->required();
  sc->add_option("--b", sc_b, "second spectrum file")->required();
  sc->add_option("--tau", sc_tau, "m/z matching tolerance in Da");
  sc->add_option("--out", sc_out, "output CSV path (default stdout)");

  // build-library
  auto* bl = app.add_subcommand("build-library", "predict a spectral library from structures");
  std::string bl_structures, bl_model, bl_vocab, bl_out;
  bl->add_option("--structures", bl_structures, "structure table (TSV)")->required();
  bl->add_option("--model", bl_model, "weights file")->required();
  bl->add_option("--vocab", bl_vocab, "vocabulary TSV")->required();
  bl->add_option("--out", bl_out, "output library path")->required();

  // search
  auto* se = app.add_subcommand("search", "query spectra against a library");
  std::string se_lib, se_query, se_out;
  double se_tau = 0.05, se_ppm = 10.0;
  std::size_t se_top = 10;
  se->add_option("--lib", se_lib, "library file")->required();
  se->add_option("--query", se_query, "query spectra (MSP or MGF)")->required();
  se->add_option("--tau", se_tau, "m/z matching tolerance in Da");
  se->add_option("--precursor-ppm", se_ppm, "precursor prefilter window");
  se->add_option("--top", se_top, "results per query");
  se->add_option("--out", se_out, "output CSV path (default stdout)");

  // eval
  auto* ev = app.add_subcommand("eval", "retrieval metrics for ground-truth queries");
  std::string ev_lib, ev_queries, ev_out;
  double ev_tau = 0.05, ev_ppm = 10.0;
  ev->add_option("--lib", ev_lib, "library file")->required();
  ev->add_option("--queries", ev_queries, "query spectra with true ids (MSP)")->required();
  ev->add_option("--tau", ev_tau, "m/z matching tolerance in Da");
  ev->add_option("--precursor-ppm", ev_ppm, "precursor prefilter window");
  ev->add_option("--out", ev_out, "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  g_verbosity = g.log_level == "quiet" ? 0 : g.log_level == "debug" ? 2 : 1;

  try {
    if (*elements) return cmd_elements(elements_out);
    if (*dec) return cmd_decompose(dec_mz, dec_precursor, dec_ppm);
    if (*sim) return cmd_simulate(g, sim_structures, g.seed, sim_max_cuts, sim_noise, sim_temp, sim_out);
    if (*bv) return cmd_build_vocab(g, bv_in, bv_k, bv_ppm, bv_mode, bv_out);
    if (*cov) return cmd_coverage(g, cov_vocab, cov_in, cov_ppm, cov_curve);
    if (*tr) {
      tr_cfg.seed = g.seed;
      return cmd_train(g, tr_in, tr_vocab, tr_ppm, tr_cfg, tr_out);
    }
    if (*pr)
      return cmd_predict(pr_smiles, pr_model, pr_vocab, pr_energies, pr_nce, pr_type,
                         pr_instrument, pr_isotopes, pr_out);
    if (*sc) return cmd_score(sc_a, sc_b, sc_tau, sc_out);
    if (*bl) return cmd_build_library(g, bl_structures, bl_model, bl_vocab, bl_out);
    if (*se) return cmd_search(g, se_lib, se_query, se_tau, se_ppm, se_top, se_out);
    if (*ev) return cmd_eval(g, ev_lib, ev_queries, ev_tau, ev_ppm, ev_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
