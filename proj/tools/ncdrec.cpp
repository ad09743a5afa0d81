// ncdrec command-line front end: ingest, build, recommend, evaluate, coverage.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include <ncdrec/ncdrec.hpp>

namespace fs = std::filesystem;
using namespace ncdrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::data: return kExitData;
    case ErrorKind::numerical: return kExitNumerical;
  }
  return kExitData;
}

/// Every RunConfig key becomes a --flag (underscores as dashes); later flags beat the config file.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override any config key (key=value), repeatable");
    for (const auto& [key, value] : RunConfig{}.entries()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      cmd->add_option("--" + flag, values[key], "config key '" + key + "'");
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load(config_file);
    for (const auto& [key, value] : values)
      if (!value.empty()) cfg.set(key, value);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ParameterError("--set expects key=value, got '" + kv + "'");
      cfg.set(std::string(detail::trim(kv.substr(0, eq))), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

struct Inputs {
  RatingsDataset data;
  Decomposition decomposition;
};

Inputs load_inputs(const RunConfig& cfg) {
  if (cfg.ratings.empty()) throw ParameterError("no ratings file given (ratings = ...)");
  if (cfg.decomposition.empty()) throw ParameterError("no decomposition file given (decomposition = ...)");
  Inputs in;
  in.data = load_ratings(cfg.ratings, parse_ratings_format(cfg.ratings_format));
  in.decomposition = load_decomposition(cfg.decomposition, parse_decomposition_format(cfg.decomposition_format),
                                        in.data, cfg.decomposition_options());
  for (const auto& w : in.decomposition.warnings()) std::cerr << "warning: " << w << '\n';
  return in;
}

void write_ids(const fs::path& path, const IdMap& ids) {
  std::ofstream out(path);
  for (auto id : ids.raw_ids()) out << id << '\n';
}

IdMap read_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data, "cannot read " + path.string());
  std::vector<std::int64_t> ids;
  std::int64_t id;
  while (in >> id) ids.push_back(id);
  return IdMap::from_ids(std::move(ids));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
  out << text;
}

void save_coldstart(const fs::path& path, const NcdrecModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
  out.write("NCDCS001", 8);
  Vector users(static_cast<Index>(model.cold_users.size()));
  for (std::size_t r = 0; r < model.cold_users.size(); ++r) users[static_cast<Index>(r)] = static_cast<double>(model.cold_users[r]);
  write_dense(out, users);
  write_dense(out, model.cold_rows);
}

std::pair<std::vector<Index>, Matrix> load_coldstart(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot read " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  if (std::string(magic, 8) != "NCDCS001") throw ParseError(path.string(), 0, "not a cold-start file");
  const Matrix users = read_dense(in);
  Matrix rows = read_dense(in);
  std::vector<Index> ids;
  for (Index r = 0; r < users.rows(); ++r) ids.push_back(static_cast<Index>(users(r, 0)));
  return {std::move(ids), std::move(rows)};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, const std::string& out_dir) {
  const Inputs in = load_inputs(cfg);
  std::cout << "users " << in.data.n_users() << "\nitems " << in.data.n_items() << "\nratings " << in.data.size()
            << "\nblocks " << in.decomposition.n_blocks() << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_coordinate((fs::path(out_dir) / "R.coo").string(), in.data.R());
    write_ids(fs::path(out_dir) / "users.txt", in.data.users());
    write_ids(fs::path(out_dir) / "items.txt", in.data.items());
    std::ofstream blocks(fs::path(out_dir) / "blocks.txt");
    for (Index k = 0; k < in.decomposition.n_blocks(); ++k)
      blocks << in.decomposition.labels()[static_cast<std::size_t>(k)] << '\t'
             << in.decomposition.blocks()[static_cast<std::size_t>(k)].size() << '\n';
  }
  return kExitOk;
}

int cmd_build(const RunConfig& cfg, const std::string& model_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Inputs in = load_inputs(cfg);
  const double load_time = seconds_since(t0);
  const CoverageReport coverage = verify_coverage(in.decomposition);
  if (!coverage.connected) std::cerr << "warning: " << coverage.describe();

  const auto t1 = std::chrono::steady_clock::now();
  const NcdrecModel model = build_ncdrec_model(in.data, in.decomposition, cfg.ncdrec_params());
  const double build_time = seconds_since(t1);

  const fs::path dir(model_dir);
  fs::create_directories(dir);
  save_svd((dir / "factors.bin").string(), model.svd);
  save_coldstart(dir / "coldstart.bin", model);
  write_coordinate((dir / "R.coo").string(), in.data.R());
  write_coordinate((dir / "X.coo").string(), model.factors.X);
  write_coordinate((dir / "Y.coo").string(), model.factors.Y);
  write_coordinate((dir / "Z.coo").string(), model.factors.Z);
  write_ids(dir / "users.txt", in.data.users());
  write_ids(dir / "items.txt", in.data.items());
  write_text(dir / "coverage.txt", coverage.describe());
  write_text(dir / "config.echo", cfg.echo());

  std::ostringstream log;
  log << "users " << in.data.n_users() << "\nitems " << in.data.n_items() << "\nratings " << in.data.size()
      << "\nblocks " << in.decomposition.n_blocks() << "\nf " << cfg.engine.f << "\nlanczos_steps "
      << model.diagnostics.lanczos_steps << "\nrestarts " << model.diagnostics.restarts << "\nbreakdowns "
      << model.diagnostics.breakdowns << "\nmax_triplet_residual "
      << (model.diagnostics.residuals.empty()
              ? 0.0
              : *std::max_element(model.diagnostics.residuals.begin(), model.diagnostics.residuals.end()))
      << "\ncold_users " << model.cold_users.size() << "\ncoldstart_iterations " << model.coldstart_iterations
      << "\nload_seconds " << load_time << "\nbuild_seconds " << build_time << '\n';
  write_text(dir / "build.log", log.str());
  std::cout << log.str();
  return kExitOk;
}

int cmd_recommend(const std::string& model_dir, std::int64_t raw_user, int n, bool json) {
  if (n <= 0) throw ParameterError("N must be positive");
  const fs::path dir(model_dir);
  if (!fs::exists(dir / "factors.bin")) throw Error(ErrorKind::data, "no model in " + model_dir);
  const IdMap users = read_ids(dir / "users.txt");
  const IdMap items = read_ids(dir / "items.txt");
  const Index u = users.find(raw_user);
  if (u < 0) throw ParameterError("unknown user " + std::to_string(raw_user));
  const SparseMatrix R = read_coordinate((dir / "R.coo").string());
  const auto [cold_users, cold_rows] = load_coldstart(dir / "coldstart.bin");

  Vector scores;
  bool cold = false;
  for (std::size_t r = 0; r < cold_users.size(); ++r)
    if (cold_users[r] == u) {
      scores = cold_rows.row(static_cast<Index>(r)).transpose();
      cold = true;
    }
  if (!cold) scores = main_scores(load_svd((dir / "factors.bin").string()), u);

  std::vector<Index> rated;
  for (SparseMatrix::InnerIterator it(R, u); it; ++it) rated.push_back(it.col());
  const RankingList list = rank_all(scores, rated);
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), list.size());
  if (json) {
    nlohmann::json out = {{"user", raw_user}, {"source", cold ? "coldstart" : "main"}, {"items", nlohmann::json::array()}};
    for (std::size_t q = 0; q < take; ++q)
      out["items"].push_back({{"rank", q + 1}, {"item", items.raw(list.items[q])}, {"score", list.scores[q]}});
    std::cout << out.dump(2) << '\n';
  } else {
    for (std::size_t q = 0; q < take; ++q)
      std::cout << q + 1 << '\t' << items.raw(list.items[q]) << '\t' << format_value(list.scores[q]) << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg) {
  if (cfg.methods.empty()) throw ParameterError("method list is empty");
  if (cfg.protocols.empty()) throw ParameterError("protocol list is empty");
  const Inputs in = load_inputs(cfg);
  const fs::path out_dir(cfg.output);
  fs::create_directories(out_dir);

  nlohmann::json summary = {{"config", config_json(cfg)}, {"results", nlohmann::json::object()},
                            {"skipped", nlohmann::json::array()}};
  int status = kExitOk;
  auto record_failure = [&](const std::string& protocol, const std::string& method, const Error& e) {
    std::cerr << "warning: " << method << " skipped in " << protocol << ": " << e.what() << '\n';
    summary["skipped"].push_back({{"protocol", protocol}, {"method", method}, {"reason", e.what()}});
    if (status == kExitOk) status = exit_code(e.kind());
  };
  auto make = [&](const std::string& name) {
    return make_method(name, cfg.ncdrec_params(), cfg.graph_params(), cfg.protocol.seed);
  };

  for (const auto& protocol : cfg.protocols) {
    std::vector<ReportRow> rows;
    const auto t0 = std::chrono::steady_clock::now();
    if (protocol == "standard" || protocol == "long-tail") {
      const StandardSplit split = make_standard_split(in.data, cfg.protocol);
      std::vector<TestCase> cases =
          protocol == "standard" ? split.cases : tail_cases(split, in.data, cfg.protocol);
      if (split.truncated > 0)
        std::cerr << "warning: " << split.truncated << " test case(s) had fewer than " << cfg.protocol.candidate_pool
                  << " unrated items to sample\n";
      for (const auto& name : cfg.methods) {
        try {
          auto method = make(name);
          method->fit(split.train, in.decomposition, {});
          const auto part = ranking_rows(protocol, name, evaluate_cases(*method, cases, cfg.protocol));
          rows.insert(rows.end(), part.begin(), part.end());
        } catch (const Error& e) {
          record_failure(protocol, name, e);
        }
      }
    } else if (protocol == "new-users") {
      const std::vector<Index> users = select_new_users(in.data, cfg.protocol);
      for (double fraction : cfg.protocol.keep_fractions) {
        const RatingsDataset snapshot = sparsify_users(in.data, users, fraction, cfg.protocol.seed);
        for (const auto& name : cfg.methods) {
          try {
            auto method = make(name);
            method->fit(snapshot, in.decomposition, users);
            const NewUserScores s = evaluate_new_users(*method, in.data, users, cfg.protocol.threads);
            const auto part = new_user_rows({{fraction, name, s}});
            rows.insert(rows.end(), part.begin(), part.end());
          } catch (const Error& e) {
            record_failure(protocol, name, e);
          }
        }
      }
    } else if (protocol == "doa-splits") {
      if (cfg.splits_dir.empty()) throw ParameterError("doa-splits needs splits_dir");
      const RatingsFormat format = parse_ratings_format(cfg.ratings_format);
      for (const auto& name : cfg.methods) {
        try {
          double macro = 0.0, micro = 0.0;
          for (int k = 1; k <= 5; ++k) {
            const std::string split = "u" + std::to_string(k);
            const fs::path base = fs::path(cfg.splits_dir) / (split + ".base");
            const fs::path test = fs::path(cfg.splits_dir) / (split + ".test");
            const RatingsDataset train = load_ratings_in(base.string(), format, in.data);
            const RatingsDataset held = load_ratings_in(test.string(), format, in.data);
            auto method = make(name);
            method->fit(train, in.decomposition, {});
            const DoaSplitResult r = evaluate_doa_split(*method, train, held, cfg.protocol.threads);
            rows.push_back({protocol, name, "doa_macro", split, 100.0 * r.macro});
            rows.push_back({protocol, name, "doa_micro", split, 100.0 * r.micro});
            macro += r.macro / 5.0;
            micro += r.micro / 5.0;
          }
          rows.push_back({protocol, name, "doa_macro", "mean", 100.0 * macro});
          rows.push_back({protocol, name, "doa_micro", "mean", 100.0 * micro});
        } catch (const Error& e) {
          record_failure(protocol, name, e);
        }
      }
    }
    write_csv((out_dir / (protocol + ".csv")).string(), rows, cfg);
    summary["results"][protocol] = rows_json(rows);
    summary["seconds"][protocol] = seconds_since(t0);
    std::cout << protocol << ": " << rows.size() << " rows -> " << (out_dir / (protocol + ".csv")).string() << '\n';
  }
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return status;
}

int cmd_coverage(const RunConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  std::cout << verify_coverage(in.decomposition).describe();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NCDREC top-N recommender"};
  app.require_subcommand(1);

  ConfigFlags ingest_flags, build_flags, eval_flags, cov_flags;
  std::string ingest_out, model_dir, rec_model;
  std::int64_t rec_user = 0;
  int rec_n = 10;
  bool rec_json = false;

  auto* ingest = app.add_subcommand("ingest", "parse and validate ratings and decomposition");
  ingest_flags.attach(ingest);
  ingest->add_option("--out", ingest_out, "write R.coo, users.txt, items.txt, blocks.txt here");

  auto* build = app.add_subcommand("build", "build an NCDREC model directory");
  build_flags.attach(build);
  build->add_option("-m,--model", model_dir, "model directory")->required();

  auto* rec = app.add_subcommand("recommend", "top-N items for a user from a built model");
  rec->add_option("-m,--model", rec_model, "model directory")->required();
  rec->add_option("-u,--user", rec_user, "raw user id")->required();
  rec->add_option("-n,--top", rec_n, "list length");
  rec->add_flag("--json", rec_json, "JSON output");

  auto* eval = app.add_subcommand("evaluate", "run evaluation protocols and write reports");
  eval_flags.attach(eval);

  auto* cov = app.add_subcommand("coverage", "check the block coupling graph");
  cov_flags.attach(cov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_flags.resolve(), ingest_out);
    if (*build) return cmd_build(build_flags.resolve(), model_dir);
    if (*rec) return cmd_recommend(rec_model, rec_user, rec_n, rec_json);
    if (*eval) return cmd_evaluate(eval_flags.resolve());
    if (*cov) return cmd_coverage(cov_flags.resolve());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
