#include "idas/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include "idas/error.hpp"
#include "idas/rag_engine.hpp"

namespace idas {

namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string pad_right(const std::string& s, std::size_t width) {
  // Width counts code points so that "Δ" aligns like any other character.
  std::size_t cps = 0;
  for (const unsigned char c : s) cps += (c & 0xC0) != 0x80;
  return cps >= width ? s : s + std::string(width - cps, ' ');
}

std::string rstrip_lines(const std::string& s) {
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string::npos) nl = s.size();
    auto end = nl;
    while (end > pos && s[end - 1] == ' ') --end;
    out.append(s, pos, end - pos);
    if (nl < s.size()) out += '\n';
    pos = nl + 1;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string scores_csv(const ScoreSet& s) {
  return fixed(s.r1, 6) + "," + fixed(s.r2, 6) + "," + fixed(s.rl, 6) + "," + fixed(s.bleu, 6);
}

std::vector<Category> categories_of(std::span<const MetricReport> reports) {
  std::set<Category> cats;
  for (const auto& r : reports) {
    for (const auto& [c, _] : r.per_category) cats.insert(c);
  }
  return {cats.begin(), cats.end()};
}

const MetricReport& find_report(std::span<const MetricReport> reports, const std::string& name) {
  for (const auto& r : reports) {
    if (r.system_name == name) return r;
  }
  throw Error(ErrorCode::UnknownSystemName, "no report for system '" + name + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const MetricReport& report) {
  auto per_category = nlohmann::json::object();
  for (const auto& [c, s] : report.per_category) {
    auto entry = nlohmann::json(s);
    entry["count"] = report.example_count.at(c);
    per_category[std::string(to_string(c))] = entry;
  }
  auto examples = nlohmann::json::array();
  for (const auto& e : report.examples) {
    examples.push_back({{"id", e.id},
                        {"category", e.category},
                        {"scores", e.scores},
                        {"failed", e.failed},
                        {"error", e.error}});
  }
  j = nlohmann::json{{"system_name", report.system_name},
                     {"per_category", per_category},
                     {"failed_count", report.failed_count},
                     {"examples", examples}};
}

void from_json(const nlohmann::json& j, MetricReport& report) {
  j.at("system_name").get_to(report.system_name);
  report.per_category.clear();
  report.example_count.clear();
  for (const auto& [name, entry] : j.at("per_category").items()) {
    const auto c = parse_category(name);
    report.per_category[c] = entry.get<ScoreSet>();
    report.example_count[c] = entry.at("count").get<std::size_t>();
  }
  report.failed_count = j.value("failed_count", std::size_t{0});
  report.examples.clear();
  for (const auto& e : j.value("examples", nlohmann::json::array())) {
    report.examples.push_back({e.at("id").get<std::string>(), e.at("category").get<Category>(),
                               e.at("scores").get<ScoreSet>(), e.value("failed", false),
                               e.value("error", std::string())});
  }
}

MetricReport evaluate(std::string system_name, const AnswerFn& system,
                      std::span<const QAPair> eval_set, const EvalOptions& options) {
  if (eval_set.empty()) throw Error(ErrorCode::InvalidArgument, "empty evaluation set");
  std::vector<QAPair> ordered(eval_set.begin(), eval_set.end());
  std::sort(ordered.begin(), ordered.end(), [](const QAPair& a, const QAPair& b) {
    if (a.category != b.category) return a.category < b.category;
    return a.id < b.id;
  });

  std::vector<ExampleScore> scored(ordered.size());
  const auto work = [&](std::size_t i) {
    const auto& pair = ordered[i];
    auto& out = scored[i];
    out.id = pair.id;
    out.category = pair.category;
    try {
      out.scores = score_pair(system(pair.question), pair.answer);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
      out.scores = {};
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.parallelism, 1, ordered.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < ordered.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < ordered.size(); i = next++) work(i);
      });
    }
  }

  MetricReport report;
  report.system_name = std::move(system_name);
  for (const auto& e : scored) {
    auto& sum = report.per_category[e.category];
    sum.r1 += e.scores.r1;
    sum.r2 += e.scores.r2;
    sum.rl += e.scores.rl;
    sum.bleu += e.scores.bleu;
    ++report.example_count[e.category];
    report.failed_count += e.failed;
  }
  for (auto& [c, sum] : report.per_category) {
    const auto n = static_cast<double>(report.example_count[c]);
    sum = {sum.r1 / n, sum.r2 / n, sum.rl / n, sum.bleu / n};
  }
  if (options.keep_examples) report.examples = std::move(scored);
  return report;
}

ComparisonTable compare(std::span<const MetricReport> reports, const std::string& baseline,
                        const std::string& treatment) {
  const auto& base = find_report(reports, baseline);
  const auto& treat = find_report(reports, treatment);
  ComparisonTable table{{reports.begin(), reports.end()}, baseline, treatment, {}};
  for (const auto& [c, b] : base.per_category) {
    auto found = treat.per_category.find(c);
    if (found == treat.per_category.end()) continue;
    const auto& t = found->second;
    table.delta[c] = {t.r1 - b.r1, t.r2 - b.r2, t.rl - b.rl, t.bleu - b.bleu};
  }
  return table;
}

std::string render_comparison_text(const ComparisonTable& table) {
  const auto cats = categories_of(table.rows);
  const std::string delta_label = "Δ% (" + table.baseline + ")";
  std::size_t name_width = std::max<std::size_t>(8, delta_label.size());
  for (const auto& r : table.rows) name_width = std::max(name_width, r.system_name.size() + 2);
  constexpr std::size_t kCell = 8;

  std::string out = pad_right("Models", name_width);
  for (const auto c : cats) out += pad_right(std::string(display_name(c)), 4 * kCell);
  out += "\n" + std::string(name_width, ' ');
  for (std::size_t i = 0; i < cats.size(); ++i) {
    for (const char* m : {"R1", "R2", "RL", "B"}) out += pad_right(m, kCell);
  }
  out += "\n";
  for (const auto& r : table.rows) {
    out += pad_right(r.system_name, name_width);
    for (const auto c : cats) {
      auto found = r.per_category.find(c);
      for (int m = 0; m < 4; ++m) {
        if (found == r.per_category.end()) {
          out += pad_right("-", kCell);
          continue;
        }
        const auto& s = found->second;
        const double v = m == 0 ? s.r1 : m == 1 ? s.r2 : m == 2 ? s.rl : s.bleu;
        out += pad_right(fixed(v, 2), kCell);
      }
    }
    out += "\n";
  }
  out += pad_right(delta_label, name_width);
  for (const auto c : cats) {
    auto found = table.delta.find(c);
    for (int m = 0; m < 4; ++m) {
      if (found == table.delta.end()) {
        out += pad_right("-", kCell);
        continue;
      }
      const auto& d = found->second;
      const double v = m == 0 ? d.r1 : m == 1 ? d.r2 : m == 2 ? d.rl : d.bleu;
      out += pad_right(fixed(v * 100.0, 2), kCell);
    }
  }
  out += "\n";
  return rstrip_lines(out);
}

std::string render_comparison_csv(const ComparisonTable& table) {
  std::string out = "system,category,r1,r2,rl,bleu\n";
  for (const auto& r : table.rows) {
    for (const auto& [c, s] : r.per_category) {
      out += csv_field(r.system_name) + "," + std::string(to_string(c)) + "," + scores_csv(s) + "\n";
    }
  }
  const auto label = csv_field("delta_pp(" + table.treatment + " - " + table.baseline + ")");
  for (const auto& [c, d] : table.delta) {
    out += label + "," + std::string(to_string(c)) + "," + fixed(d.r1 * 100.0, 2) + "," +
           fixed(d.r2 * 100.0, 2) + "," + fixed(d.rl * 100.0, 2) + "," + fixed(d.bleu * 100.0, 2) + "\n";
  }
  return out;
}

std::string render_report_text(const MetricReport& report) {
  ComparisonTable single{{report}, report.system_name, report.system_name, {}};
  std::string table = render_comparison_text(single);
  // Drop the (all-zero) delta line for a single report.
  table.erase(table.rfind('\n', table.size() - 2) + 1);
  std::string out = "System: " + report.system_name + "\n" + table;
  for (const auto& [c, n] : report.example_count) {
    out += std::string(display_name(c)) + ": " + std::to_string(n) + " examples\n";
  }
  out += "Failed examples: " + std::to_string(report.failed_count) + "\n";
  return out;
}

std::string render_report_csv(const MetricReport& report) {
  std::string out = "system,category,count,r1,r2,rl,bleu\n";
  for (const auto& [c, s] : report.per_category) {
    out += csv_field(report.system_name) + "," + std::string(to_string(c)) + "," +
           std::to_string(report.example_count.at(c)) + "," + scores_csv(s) + "\n";
  }
  return out;
}

std::string render_examples_csv(const MetricReport& report) {
  std::string out = "system,id,category,r1,r2,rl,bleu,failed\n";
  for (const auto& e : report.examples) {
    out += csv_field(report.system_name) + "," + csv_field(e.id) + "," +
           std::string(to_string(e.category)) + "," + scores_csv(e.scores) + "," +
           (e.failed ? "1" : "0") + "\n";
  }
  return out;
}

SweepResult chunk_sweep(std::span<const Document> corpus, std::span<const std::size_t> sizes,
                        std::span<const QAPair> eval_set, const SweepSetup& setup) {
  if (sizes.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one chunk size");
  const std::set<std::size_t> distinct(sizes.begin(), sizes.end());
  if (distinct.size() != sizes.size()) throw Error(ErrorCode::InvalidArgument, "sweep sizes must be distinct");
  if (!setup.engine_factory) throw Error(ErrorCode::InvalidArgument, "sweep needs an engine factory");

  SweepResult sweep;
  for (const auto size : sizes) {
    try {
      ChunkPolicy policy;
      policy.mode = ChunkMode::FixedTokens;
      policy.chunk_size = size;
      policy.overlap = 0;
      policy.source_label_prefix = setup.source_label_prefix;
      const auto chunks = chunk_corpus(corpus, policy);
      std::shared_ptr<const FlatIndex> index = build_index(chunks, setup.embedder);
      const auto system = setup.engine_factory(index);
      sweep.reports.emplace(size, evaluate(setup.system_name + "@" + std::to_string(size), system,
                                           eval_set, setup.options));
    } catch (const std::exception& e) {
      sweep.failures.emplace(size, e.what());
    }
  }
  return sweep;
}

std::string render_sweep_text(const SweepResult& sweep) {
  std::vector<MetricReport> rows;
  for (const auto& [_, r] : sweep.reports) rows.push_back(r);
  std::string out;
  if (!rows.empty()) {
    ComparisonTable table{rows, rows.front().system_name, rows.front().system_name, {}};
    out = render_comparison_text(table);
    out.erase(out.rfind('\n', out.size() - 2) + 1);
  }
  for (const auto& [size, why] : sweep.failures) {
    out += "size " + std::to_string(size) + " failed: " + why + "\n";
  }
  return out;
}

std::string render_sweep_csv(const SweepResult& sweep) {
  std::string out = "chunk_size,category,count,r1,r2,rl,bleu\n";
  for (const auto& [size, r] : sweep.reports) {
    for (const auto& [c, s] : r.per_category) {
      out += std::to_string(size) + "," + std::string(to_string(c)) + "," +
             std::to_string(r.example_count.at(c)) + "," + scores_csv(s) + "\n";
    }
  }
  return out;
}

std::string render_sweep_examples_csv(const SweepResult& sweep) {
  std::string out = "chunk_size,id,category,r1,r2,rl,bleu,failed\n";
  for (const auto& [size, r] : sweep.reports) {
    for (const auto& e : r.examples) {
      out += std::to_string(size) + "," + csv_field(e.id) + "," + std::string(to_string(e.category)) +
             "," + scores_csv(e.scores) + "," + (e.failed ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace idas
