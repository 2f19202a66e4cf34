// mvlab - command-line front end: ingest, refine, analyze, recommend, serve.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvlab/annotation.hpp"
#include "mvlab/error.hpp"
#include "mvlab/ingest.hpp"
#include "mvlab/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw mvlab::Error(mvlab::ErrorCode::Io, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

mvlab::Library open_corpus(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw mvlab::Error(mvlab::ErrorCode::Io, "no such directory: " + dir.string());
  return mvlab::load_corpus(dir);
}

struct RefineOptions {
  double theta = mvlab::RefinementConfig{}.theta_fraction;
  int max_iterations = mvlab::RefinementConfig{}.max_iterations;

  mvlab::RefinementConfig config() const {
    mvlab::RefinementConfig cfg{theta, max_iterations};
    cfg.check();
    return cfg;
  }
};

void add_refine_options(CLI::App* cmd, RefineOptions& opt) {
  cmd->add_option("--theta", opt.theta, "Alignment threshold as a fraction of the group size")
      ->capture_default_str();
  cmd->add_option("--max-iterations", opt.max_iterations, "Merge iteration limit")->capture_default_str();
}

int run_ingest(const fs::path& dir, const fs::path& out, const RefineOptions& opt, unsigned threads) {
  mvlab::IngestConfig cfg{opt.config(), threads};
  const auto result = mvlab::ingest(dir, cfg);
  mvlab::save_derived(result.library, out);
  std::cout << result.report.summary();
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "derived: " << out.string() << "\n";
  return kExitOk;
}

int run_refine(const fs::path& file, const RefineOptions& opt, const std::optional<fs::path>& out_opt) {
  auto annotation = mvlab::parse_annotation(read_file(file));
  if (annotation.doi.empty()) annotation.doi = mvlab::doi_from_stem(file.stem().string());
  auto normalized = mvlab::normalize(annotation);
  const auto refined = mvlab::refine(normalized.design, opt.config());
  for (const auto& w : normalized.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& w : refined.warnings) std::cerr << "warning: " << w << "\n";

  mvlab::LayoutRegistry registry;
  const auto tree = mvlab::slicing_tree(refined.design);
  const auto code = mvlab::layout_code(refined.design, registry);
  if (!mvlab::is_guillotine(tree)) {
    std::cerr << "warning: non-guillotine layout; no sequence of full cuts separates every view\n";
  }

  auto doc = json::parse(mvlab::serialize_design(refined.design));
  doc["layout"] = code.str();
  doc["converged"] = refined.converged;
  doc["non_guillotine"] = !mvlab::is_guillotine(tree);
  fs::path out = out_opt.value_or(file.parent_path() / (file.stem().string() + ".refined.json"));
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw mvlab::Error(mvlab::ErrorCode::Io, "cannot write " + out.string());
  os << doc.dump(2) << "\n";

  const double gap = std::max(0.0, 1.0 - mvlab::level1_area(refined.design));
  std::cout << "layout: " << code.str() << "\n"
            << "converged: " << (refined.converged ? "yes" : "no") << "\n"
            << "iterations: " << refined.iterations << "\n"
            << "residual gap area: " << fmt(gap) << "\n"
            << "residual overlap area: " << fmt(mvlab::max_level1_overlap(refined.design)) << "\n"
            << "written: " << out.string() << "\n";
  return kExitOk;
}

struct AnalyzeOptions {
  std::string metric;
  std::string format = "csv";
  std::optional<std::string> type;
  std::optional<std::string> layout;
  std::string mode = "leaf";
};

int run_analyze(const fs::path& dir, const AnalyzeOptions& opt) {
  mvlab::Service service({}, open_corpus(dir));
  mvlab::ApiRequest req{"GET", "/stats/" + opt.metric, {}, {}, {}};
  if (opt.type) req.query.emplace_back("type", *opt.type);
  if (opt.layout) req.query.emplace_back("layout", *opt.layout);
  req.query.emplace_back("mode", opt.mode);
  const auto res = service.dispatch(req);
  const auto body = json::parse(res.body);
  if (res.status != 200) {
    std::cerr << "error: " << body["error"]["message"].get<std::string>() << "\n";
    return res.status >= 500 ? kExitInternal : kExitInput;
  }
  if (opt.format == "json") {
    std::cout << body.dump(2) << "\n";
    return kExitOk;
  }

  auto num = [](const json& v) { return v.is_null() ? std::string{} : fmt(v.get<double>()); };
  std::ostringstream out;
  if (opt.metric == "frequency") {
    out << "type,frequency\n";
    for (auto t : mvlab::all_view_types()) {
      out << mvlab::canonical_name(t) << "," << num(body["frequency"][std::string(mvlab::canonical_name(t))]) << "\n";
    }
  } else if (opt.metric == "counts") {
    out << "views,mvs\n";
    std::vector<std::pair<int, std::string>> keys;
    for (const auto& [k, v] : body["counts"].items()) keys.emplace_back(std::stoi(k), k);
    std::sort(keys.begin(), keys.end());
    for (const auto& [n, k] : keys) out << k << "," << body["counts"][k].get<std::size_t>() << "\n";
  } else if (opt.metric == "cooccurrence") {
    out << "type";
    for (const auto& t : body["types"]) out << "," << t.get<std::string>();
    out << "\n";
    for (std::size_t i = 0; i < body["types"].size(); ++i) {
      out << body["types"][i].get<std::string>();
      for (const auto& v : body["matrix"][i]) out << "," << num(v);
      out << "\n";
    }
  } else if (opt.metric == "aspect") {
    out << "type,n,min,q1,median,q3,max,mean\n";
    for (const auto& [t, a] : body["aspect"].items()) {
      out << t << "," << a["n"].get<std::size_t>();
      for (const char* k : {"min", "q1", "median", "q3", "max", "mean"}) out << "," << num(a[k]);
      out << "\n";
    }
  } else if (opt.metric == "position") {
    out << "type,p1,p2,p3,p4,p5,p6,p7,p8,p9\n";
    for (const auto& [t, g] : body["position"].items()) {
      out << t;
      for (const auto& v : g) out << "," << num(v);
      out << "\n";
    }
  } else if (opt.metric == "stability") {
    const auto layout = body["layout"].is_null() ? std::string{} : body["layout"].get<std::string>();
    out << "type,layout,stability\n";
    if (body["stability"].is_object()) {
      for (const auto& [t, v] : body["stability"].items()) out << t << "," << layout << "," << num(v) << "\n";
    } else {
      out << body["type"].get<std::string>() << "," << layout << "," << num(body["stability"]) << "\n";
    }
  }
  std::cout << out.str();
  return kExitOk;
}

int run_recommend(const fs::path& dir, const fs::path& sketch_file, std::size_t top,
                  const std::vector<std::size_t>& views, const std::string& format) {
  const auto sketch = mvlab::parse_sketch(read_file(sketch_file));
  const auto lib = open_corpus(dir);
  const auto entries = lib.entries();
  const std::set<std::size_t> filter(views.begin(), views.end());
  const auto results = mvlab::recommend(entries, sketch, filter, top);
  if (format == "json") {
    json list = json::array();
    for (const auto& r : results) {
      list.push_back({{"rank", r.rank}, {"doi", r.doi}, {"score", r.score},
                      {"layout", r.layout.str()}, {"count", r.view_count}});
    }
    std::cout << json{{"results", list}}.dump(2) << "\n";
  } else {
    std::cout << "rank,doi,score,layout,views\n";
    for (const auto& r : results) {
      std::cout << r.rank << "," << r.doi << "," << fmt(r.score) << "," << r.layout.str() << ","
                << r.view_count << "\n";
    }
  }
  return kExitOk;
}

int run_serve(mvlab::ServiceConfig cfg) {
  std::error_code ec;
  if (!fs::is_directory(cfg.corpus_dir, ec)) {
    std::cerr << "error: no such directory: " << cfg.corpus_dir.string() << "\n";
    return kExitInput;
  }
  // Signals are taken by a dedicated thread; every other thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  mvlab::Service service(cfg);
  const int port = service.bind();
  if (port < 0) {
    std::cerr << "error: cannot bind " << cfg.host << ":" << cfg.port << "\n";
    return kExitInput;
  }
  std::atomic<bool> done{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    if (!done) std::cerr << "shutting down\n";
    service.stop();
  });
  std::cerr << "serving " << service.corpus_size() << " MVs on " << cfg.host << ":" << port << std::endl;
  const bool ok = service.run();
  done = true;
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return ok ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-view layout analysis and recommendation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mvlab 0.1.0");

  fs::path corpus;
  RefineOptions refine_opt;

  auto* ingest = app.add_subcommand("ingest", "Parse, refine and encode an annotation directory");
  fs::path ingest_dir;
  fs::path ingest_out = "derived";
  unsigned threads = 0;
  ingest->add_option("dir", ingest_dir, "Annotation directory")->required();
  ingest->add_option("--out", ingest_out, "Output directory for derived artifacts")->capture_default_str();
  ingest->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  add_refine_options(ingest, refine_opt);

  auto* refine = app.add_subcommand("refine", "Refine one annotation file into <file>.refined.json");
  fs::path refine_file;
  std::optional<fs::path> refine_out;
  refine->add_option("file", refine_file, "Annotation JSON")->required();
  refine->add_option("--out", refine_out, "Output path");
  add_refine_options(refine, refine_opt);

  auto* analyze = app.add_subcommand("analyze", "Print an analytics metric");
  AnalyzeOptions analyze_opt;
  analyze->add_option("corpus", corpus, "Derived or annotation directory")->envname("MVLAB_CORPUS")->required();
  analyze->add_option("--metric", analyze_opt.metric, "Metric")
      ->required()
      ->check(CLI::IsMember({"frequency", "counts", "cooccurrence", "aspect", "position", "stability"}));
  analyze->add_option("--format", analyze_opt.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  analyze->add_option("--type", analyze_opt.type, "View type (stability)");
  analyze->add_option("--layout", analyze_opt.layout, "Layout code filter (stability)");
  analyze->add_option("--mode", analyze_opt.mode, "View counting for counts")
      ->check(CLI::IsMember({"leaf", "level1"}))
      ->capture_default_str();

  auto* rec = app.add_subcommand("recommend", "Rank corpus MVs against a sketch");
  fs::path sketch_file;
  std::size_t top = 10;
  std::vector<std::size_t> views;
  std::string rec_format = "csv";
  rec->add_option("corpus", corpus, "Derived or annotation directory")->envname("MVLAB_CORPUS")->required();
  rec->add_option("--sketch", sketch_file, "Sketch JSON")->required();
  rec->add_option("--top", top, "Number of results (0 = all)")->capture_default_str();
  rec->add_option("--views", views, "Allowed view counts")->delimiter(',');
  rec->add_option("--format", rec_format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  mvlab::ServiceConfig serve_cfg;
  std::string thumbnails;
  serve->add_option("corpus", corpus, "Derived or annotation directory")->envname("MVLAB_CORPUS");
  serve->add_option("--corpus-dir", corpus, "Same as the positional argument");
  serve->add_option("--port", serve_cfg.port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--host", serve_cfg.host, "Listen address")->capture_default_str();
  serve->add_option("--thumbnails-dir", thumbnails, "Directory of <doi>.png thumbnails");
  serve->add_option("--cors-origin", serve_cfg.cors_origin, "Access-Control-Allow-Origin value")
      ->capture_default_str();
  serve->add_option("--admin-token", serve_cfg.admin_token, "Token for POST /admin/reload")
      ->envname("MVLAB_ADMIN_TOKEN");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*ingest) return run_ingest(ingest_dir, ingest_out, refine_opt, threads);
    if (*refine) return run_refine(refine_file, refine_opt, refine_out);
    if (*analyze) return run_analyze(corpus, analyze_opt);
    if (*rec) return run_recommend(corpus, sketch_file, top, views, rec_format);
    if (*serve) {
      if (corpus.empty()) {
        std::cerr << "error: a corpus directory is required\n";
        return kExitInput;
      }
      serve_cfg.corpus_dir = corpus;
      if (!thumbnails.empty()) serve_cfg.thumbnails_dir = thumbnails;
      serve_cfg.ingest.refinement = refine_opt.config();
      return run_serve(serve_cfg);
    }
  } catch (const mvlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInput;
}
