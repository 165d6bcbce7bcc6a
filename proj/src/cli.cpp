#include "idas/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <CLI11.hpp>

#include "idas/app_config.hpp"
#include "idas/error.hpp"
#include "idas/eval_harness.hpp"
#include "idas/service.hpp"

namespace idas {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out || !(out << contents) || !out.flush()) {
      throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
  }
  fs::rename(tmp, path);
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::vector<QAPair> read_pairs_file(const fs::path& path) {
  auto in = open_in(path);
  return read_pairs_jsonl(in);
}

std::string pairs_jsonl(std::span<const QAPair> pairs) {
  std::ostringstream out;
  write_pairs_jsonl(out, pairs);
  return out.str();
}

std::string render_answer_text(const AdvisoryAnswer& a) {
  std::string out = "Question: " + a.question + "\n\nDraft:\n" + a.draft + "\n\n";
  if (a.used_retrieval) {
    out += "Retrieval: used (" + std::to_string(a.hits.size()) + " hits)\n";
  } else {
    out += "Retrieval: not used (no hit above threshold)\n";
  }
  for (const auto& h : a.hits) {
    char score[32];
    std::snprintf(score, sizeof score, "%.4f", h.score);
    out += "  " + std::string(score) + "  " + h.chunk_id + "  " + h.source_label + "\n";
  }
  out += "\nFinal:\n" + a.final_answer + "\n";
  if (!a.citations.empty()) {
    out += "\nCitations:\n";
    for (const auto& c : a.citations) out += "  " + c + "\n";
  }
  for (const auto& w : a.warnings) out += "warning: " + w + "\n";
  return out;
}

struct Context {
  std::string config_path;
  AppConfig config;
  std::shared_ptr<const TemplateStore> templates;

  void load() {
    config = load_app_config(config_path);
    templates = load_templates(config);
    validate_app_config(config, *templates);
  }

  std::shared_ptr<const AdvisoryEngine> engine(std::shared_ptr<const FlatIndex> index) const {
    return std::make_shared<const AdvisoryEngine>(std::move(index), config.embedder, config.backend,
                                                  templates, config.engine);
  }
};

int serve_until_signal(Service& service, const AppConfig& cfg, std::ostream& out) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int port = service.bind(cfg.host, cfg.port);
  out << "listening on " << cfg.host << ":" << port << std::endl;
  std::atomic<bool> signalled{false};
  std::jthread waiter([&service, &signalled, set] {
    int sig = 0;
    sigwait(&set, &sig);
    signalled = true;
    service.stop();
  });
  service.listen();
  // listen() can also return on a socket failure; wake the waiter then.
  if (!signalled) kill(getpid(), SIGTERM);
  return signalled ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-augmented driver advisory: ingest, ask, forge, eval, serve"};
  app.name("idas");
  app.require_subcommand(1);
  Context ctx;
  app.add_option("-c,--config", ctx.config_path, "Config file (JSON)")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Chunk and index the corpus, persist the index");
  std::string chunks_out;
  ingest->add_option("--chunks-out", chunks_out, "Also write the chunks as JSON lines");

  // ask
  auto* ask = app.add_subcommand("ask", "Answer one question");
  std::string question;
  bool as_json = false;
  std::optional<double> threshold;
  ask->add_option("-q,--question", question, "Question text")->required();
  ask->add_flag("--json", as_json, "Print the full answer trace as JSON");
  ask->add_option("--threshold", threshold, "Override engine.score_threshold");

  // forge
  auto* forge = app.add_subcommand("forge", "Generate Q&A pairs from the corpus");
  std::string forge_out, rejected_out, report_out, report_csv;
  forge->add_option("-o,--out", forge_out, "Kept pairs (JSON lines)")->required();
  forge->add_option("--rejected-out", rejected_out, "Rejected pairs with reasons (JSON lines)");
  forge->add_option("--report-out", report_out, "Statistics table (text)");
  forge->add_option("--report-csv", report_csv, "Statistics table (CSV)");

  // convert-exam
  auto* convert = app.add_subcommand("convert-exam", "Turn exam items into Q&A pairs");
  std::string exam_in, exam_out;
  convert->add_option("-i,--in", exam_in, "Exam items (JSON lines)")->required();
  convert->add_option("-o,--out", exam_out, "Converted pairs (JSON lines)")->required();

  // sample-eval
  auto* sample = app.add_subcommand("sample-eval", "Stratified sample of an evaluation set");
  std::string sample_in, sample_out;
  std::size_t per_category = 100;
  std::uint64_t seed = 0;
  sample->add_option("-i,--in", sample_in, "Pairs (JSON lines)")->required();
  sample->add_option("-o,--out", sample_out, "Sampled pairs (JSON lines)")->required();
  sample->add_option("-n,--per-category", per_category, "Pairs per category")->capture_default_str();
  sample->add_option("--seed", seed, "Sampling seed")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "Score a system on an evaluation set");
  std::string eval_set, system_kind = "rag", system_name, eval_dir;
  eval->add_option("-e,--eval-set", eval_set, "Evaluation pairs (JSON lines)")->required();
  eval->add_option("--system", system_kind, "rag or direct")
      ->check(CLI::IsMember({"rag", "direct"}))
      ->capture_default_str();
  eval->add_option("--name", system_name, "Report name (defaults to the system)");
  eval->add_option("-o,--out-dir", eval_dir, "Directory for report files")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare saved reports");
  std::vector<std::string> report_paths;
  std::string baseline, treatment, compare_csv;
  cmp->add_option("-r,--report", report_paths, "Report JSON (repeatable)")->required();
  cmp->add_option("--baseline", baseline, "Baseline system name")->required();
  cmp->add_option("--treatment", treatment, "Treatment system name")->required();
  cmp->add_option("--csv", compare_csv, "Also write the table as CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Evaluate RAG over several chunk sizes");
  std::string sweep_set, sweep_dir;
  std::vector<std::size_t> sizes{200, 500, 1000};
  sweep->add_option("-e,--eval-set", sweep_set, "Evaluation pairs (JSON lines)")->required();
  sweep->add_option("--sizes", sizes, "Chunk sizes in tokens")->delimiter(',')->capture_default_str();
  sweep->add_option("-o,--out-dir", sweep_dir, "Directory for sweep files")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host, "Override listen.host");
  serve->add_option("--port", port, "Override listen.port");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    ctx.load();
    auto& cfg = ctx.config;

    if (*ingest) {
      const auto result = ingest_corpus(cfg);
      result.index->persist(cfg.index_path);
      if (!chunks_out.empty()) {
        std::ostringstream buf;
        write_chunks_jsonl(buf, result.chunks);
        write_file(chunks_out, buf.str());
      }
      out << "documents: " << result.summary.documents << "\n";
      out << "chunks: " << result.summary.chunks << "\n";
      for (const auto& [c, n] : result.summary.chunks_per_category) {
        out << "  " << display_name(c) << ": " << n << "\n";
      }
      for (const auto& e : result.summary.errors) err << "skipped " << e.path << ": " << e.message << "\n";
      out << "index: " << cfg.index_path.string() << "\n";
      return 0;
    }

    if (*ask) {
      if (threshold) cfg.engine.score_threshold = *threshold;
      const auto answer = ctx.engine(open_index(cfg))->ask(question);
      if (as_json) {
        out << nlohmann::json(answer).dump(2) << "\n";
      } else {
        out << render_answer_text(answer);
      }
      return 0;
    }

    if (*forge) {
      const auto corpus = load_configured_corpus(cfg);
      for (const auto& e : corpus.errors) err << "skipped " << e.path << ": " << e.message << "\n";
      const DatasetForge forger(cfg.backend, ctx.templates, cfg.forge);
      const auto result = forger.build_rtd(corpus.documents);
      write_file(forge_out, pairs_jsonl(result.pairs));
      if (!rejected_out.empty()) {
        std::string lines;
        for (const auto& r : result.rejected) {
          auto j = nlohmann::json(r.pair);
          j["reason"] = to_string(r.reason);
          lines += j.dump() + "\n";
        }
        write_file(rejected_out, lines);
      }
      const auto report = render_forge_report(result.report);
      if (!report_out.empty()) write_file(report_out, report);
      if (!report_csv.empty()) write_file(report_csv, render_forge_csv(result.report));
      out << report;
      return 0;
    }

    if (*convert) {
      auto in = open_in(exam_in);
      const auto items = read_exam_jsonl(in);
      const DatasetForge forger(cfg.backend, ctx.templates, cfg.forge);
      std::vector<QAPair> pairs;
      std::size_t skipped = 0;
      for (const auto& item : items) {
        const auto conv = forger.convert_exam_item(item);
        if (conv.pair) {
          pairs.push_back(*conv.pair);
        } else {
          ++skipped;
          err << "skipped " << item.id << ": " << (conv.reason ? to_string(*conv.reason) : "")
              << (conv.detail.empty() ? "" : " (" + conv.detail + ")") << "\n";
        }
      }
      write_file(exam_out, pairs_jsonl(pairs));
      out << "converted: " << pairs.size() << "\nskipped: " << skipped << "\n";
      return 0;
    }

    if (*sample) {
      const auto pairs = read_pairs_file(sample_in);
      const auto picked = sample_eval_set(pairs, per_category, seed);
      write_file(sample_out, pairs_jsonl(picked));
      out << "sampled: " << picked.size() << "\n";
      return 0;
    }

    if (*eval) {
      const auto pairs = read_pairs_file(eval_set);
      const auto engine = ctx.engine(open_index(cfg));
      AnswerFn system;
      if (system_kind == "rag") {
        system = [engine](const std::string& q) { return engine->ask(q).final_answer; };
      } else {
        system = [engine](const std::string& q) { return engine->answer_direct(q); };
      }
      const auto name = system_name.empty() ? system_kind : system_name;
      const auto report = evaluate(name, system, pairs, {cfg.eval_parallelism, true});
      const fs::path dir(eval_dir);
      write_file(dir / (name + ".report.json"), nlohmann::json(report).dump(2) + "\n");
      write_file(dir / (name + ".report.csv"), render_report_csv(report));
      write_file(dir / (name + ".examples.csv"), render_examples_csv(report));
      const auto text = render_report_text(report);
      write_file(dir / (name + ".report.txt"), text);
      out << text;
      return report.failed_count == 0 ? 0 : 1;
    }

    if (*cmp) {
      std::vector<MetricReport> reports;
      for (const auto& p : report_paths) {
        auto in = open_in(p);
        reports.push_back(nlohmann::json::parse(in).get<MetricReport>());
      }
      const auto table = compare(reports, baseline, treatment);
      if (!compare_csv.empty()) write_file(compare_csv, render_comparison_csv(table));
      out << render_comparison_text(table);
      return 0;
    }

    if (*sweep) {
      const auto pairs = read_pairs_file(sweep_set);
      const auto corpus = load_configured_corpus(cfg);
      SweepSetup setup;
      setup.embedder = cfg.embedder;
      setup.source_label_prefix = cfg.chunking.source_label_prefix;
      setup.options = {cfg.eval_parallelism, true};
      setup.engine_factory = [&ctx](std::shared_ptr<const FlatIndex> index) -> AnswerFn {
        auto engine = ctx.engine(std::move(index));
        return [engine](const std::string& q) { return engine->ask(q).final_answer; };
      };
      const auto result = chunk_sweep(corpus.documents, sizes, pairs, setup);
      const fs::path dir(sweep_dir);
      write_file(dir / "sweep.csv", render_sweep_csv(result));
      write_file(dir / "sweep_examples.csv", render_sweep_examples_csv(result));
      const auto text = render_sweep_text(result);
      write_file(dir / "sweep.txt", text);
      out << text;
      return result.failures.empty() ? 0 : 1;
    }

    if (*serve) {
      if (host) cfg.host = *host;
      if (port) cfg.port = *port;
      Service service(cfg, ctx.templates, open_index(cfg));
      return serve_until_signal(service, cfg, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace idas
