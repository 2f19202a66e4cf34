#include "mvlab/service.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>

#include "design_json.hpp"
#include "httplib.h"
#include "json_util.hpp"
#include "mvlab/annotation.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

namespace fs = std::filesystem;
using detail::json;

namespace {

struct Snapshot {
  Library lib;
  std::vector<std::size_t> view_counts;
};

std::shared_ptr<const Snapshot> make_snapshot(Library lib) {
  auto snap = std::make_shared<Snapshot>();
  for (const auto& mv : lib.corpus.items) snap->view_counts.push_back(leaf_count(mv));
  snap->lib = std::move(lib);
  return snap;
}

std::string dump(const json& j) { return detail::canonical_dump(j, detail::RealFormat::RoundTrip, false); }

ApiResponse json_response(int status, const json& body) { return {status, "application/json", dump(body), {}}; }

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"error", {{"code", code}, {"message", message}}}});
}

/// Comma-separated and repeated parameters, in order of appearance.
std::vector<std::string> param_values(const ApiRequest& req, std::string_view key) {
  std::vector<std::string> out;
  for (const auto& [k, v] : req.query) {
    if (k != key) continue;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
  }
  return out;
}

std::optional<std::string> param(const ApiRequest& req, std::string_view key) {
  for (const auto& [k, v] : req.query) {
    if (k == key) return v;
  }
  return std::nullopt;
}

struct BadRequest {
  std::string message;
};

std::optional<int> parse_count(std::string_view s) {
  if (s == "10+") return kCountBucketMax;
  if (s.empty() || s.size() > 6) return std::nullopt;
  int v = 0;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return std::nullopt;
    v = v * 10 + (ch - '0');
  }
  if (v < 1) return std::nullopt;
  return v;
}

std::string count_key(int bucket) {
  return bucket >= kCountBucketMax ? std::to_string(kCountBucketMax) + "+" : std::to_string(bucket);
}

ViewType require_type(const std::string& name) {
  auto t = parse_view_type(name);
  if (!t) throw BadRequest{"unknown view type '" + name + "'"};
  return *t;
}

json grid_json(const PositionGrid& g) { return json(std::vector<double>(g.begin(), g.end())); }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Library load_corpus(const fs::path& dir, const IngestConfig& cfg) {
  if (is_derived_dir(dir)) return load_derived(dir);
  return std::move(ingest(dir, cfg).library);
}

struct Service::Impl {
  ServiceConfig cfg;
  mutable std::mutex mutex;
  mutable std::shared_ptr<const Snapshot> snapshot;
  httplib::Server server;
  std::atomic<bool> bound{false};

  std::shared_ptr<const Snapshot> current() const {
    std::lock_guard lock(mutex);
    return snapshot;
  }

  void swap(Library lib) const {
    auto next = make_snapshot(std::move(lib));
    std::lock_guard lock(mutex);
    snapshot = std::move(next);
  }

  std::optional<std::string> thumbnail_url(const std::string& doi) const {
    if (!cfg.thumbnails_dir) return std::nullopt;
    const auto stem = fs::path(doi_to_filename(doi)).stem().string();
    for (const char* ext : {".png", ".jpg", ".jpeg", ".webp"}) {
      std::error_code ec;
      if (fs::is_regular_file(*cfg.thumbnails_dir / (stem + ext), ec)) {
        return "/thumbnails/" + httplib::detail::encode_url(stem + ext);
      }
    }
    return std::nullopt;
  }

  json summary(const Snapshot& s, std::size_t i) const {
    const auto& mv = s.lib.corpus.items[i];
    const auto meta = mv.metadata.value_or(Metadata{});
    json out{{"doi", mv.doi()},
             {"venue", meta.venue},
             {"year", meta.year ? json(*meta.year) : json(nullptr)},
             {"title", meta.title},
             {"count", s.view_counts[i]},
             {"nodes", mv.nodes.size()},
             {"layout", s.lib.codes[i].str()},
             {"non_guillotine", static_cast<bool>(s.lib.non_guillotine[i])}};
    if (auto url = thumbnail_url(mv.doi())) out["thumbnail"] = *url;
    return out;
  }

  ApiResponse list_mvs(const Snapshot& s, const ApiRequest& req) const {
    std::set<ViewType> types;
    for (const auto& t : param_values(req, "types")) types.insert(require_type(t));
    std::set<int> counts;
    for (const auto& c : param_values(req, "counts")) {
      auto v = parse_count(c);
      if (!v) throw BadRequest{"invalid view count '" + c + "'"};
      counts.insert(std::min(*v, kCountBucketMax));
    }
    std::set<LayoutCode> layouts;
    for (const auto& l : param_values(req, "layouts")) {
      auto code = LayoutCode::parse(l);
      if (!code) throw BadRequest{"invalid layout code '" + l + "'"};
      layouts.insert(*code);
    }
    const auto group_by = param(req, "group_by").value_or("none");
    if (group_by != "none" && group_by != "count" && group_by != "layout") {
      throw BadRequest{"group_by must be none, count or layout"};
    }
    const auto color_by = param(req, "color_by").value_or("year");
    if (color_by != "year" && color_by != "venue") throw BadRequest{"color_by must be year or venue"};

    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < s.lib.corpus.items.size(); ++i) {
      const auto bucket = std::min(static_cast<int>(s.view_counts[i]), kCountBucketMax);
      if (!counts.empty() && !counts.contains(bucket)) continue;
      if (!layouts.empty() && !layouts.contains(s.lib.codes[i])) continue;
      if (!types.empty()) {
        const auto leaves = leaf_views(s.lib.corpus.items[i]);
        const bool any = std::any_of(leaves.begin(), leaves.end(),
                                     [&](const View& v) { return types.contains(v.type); });
        if (!any) continue;
      }
      hits.push_back(i);
    }

    json out{{"total", hits.size()}, {"group_by", group_by}, {"color_by", color_by}};
    if (group_by == "none") {
      json mvs = json::array();
      for (auto i : hits) mvs.push_back(summary(s, i));
      out["mvs"] = std::move(mvs);
      return json_response(200, out);
    }
    // Groups in key order: view count ascending, or layout code order.
    std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
    for (auto i : hits) {
      if (group_by == "count") {
        const int bucket = std::min(static_cast<int>(s.view_counts[i]), kCountBucketMax);
        groups[{bucket, count_key(bucket)}].push_back(i);
      } else {
        const auto& code = s.lib.codes[i];
        groups[{code.count, code.str()}].push_back(i);
      }
    }
    json list = json::array();
    for (const auto& [key, members] : groups) {
      if (list.size() == kMaxGroups) break;
      json mvs = json::array();
      for (auto i : members) mvs.push_back(summary(s, i));
      list.push_back({{"key", key.second}, {"size", members.size()}, {"mvs", std::move(mvs)}});
    }
    out["groups_total"] = groups.size();
    out["groups"] = std::move(list);
    return json_response(200, out);
  }

  ApiResponse mv_detail(const Snapshot& s, const std::string& doi) const {
    const auto idx = s.lib.index_of_doi(doi);
    if (!idx) return error_response(404, "E_NOT_FOUND", "unknown doi '" + doi + "'");
    const auto& mv = s.lib.corpus.items[*idx];
    auto out = detail::design_to_json(mv);
    out["metadata"] = detail::metadata_to_json(mv.metadata.value_or(Metadata{doi, {}, {}, {}, {}}));
    out["layout"] = s.lib.codes[*idx].str();
    out["count"] = s.view_counts[*idx];
    out["non_guillotine"] = static_cast<bool>(s.lib.non_guillotine[*idx]);
    out["converged"] = static_cast<bool>(s.lib.converged[*idx]);
    const auto& t = s.lib.tensors[*idx].values;
    out["tensor"] = std::vector<double>(t.begin(), t.end());
    if (auto url = thumbnail_url(doi)) out["thumbnail"] = *url;
    return json_response(200, out);
  }

  ApiResponse recommend_route(const Snapshot& s, const ApiRequest& req) const {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return error_response(422, "E_MALFORMED", e.what());
    }
    if (!body.is_object() || !body.contains("sketch")) {
      return error_response(422, "E_MALFORMED", "body needs a 'sketch' object");
    }
    UserSketch sketch;
    std::set<std::size_t> filter;
    std::size_t top_k = 10;
    try {
      sketch = parse_sketch(body["sketch"].dump());
      for (const char* key : {"views", "filter"}) {
        auto it = body.find(key);
        if (it == body.end() || it->is_null()) continue;
        if (!it->is_array()) return error_response(422, "E_MALFORMED", std::string("'") + key + "' must be an array");
        for (const auto& v : *it) {
          if (!v.is_number_integer() || v.get<long long>() < 1) {
            return error_response(422, "E_MALFORMED", std::string("'") + key + "' holds positive integers");
          }
          filter.insert(v.get<std::size_t>());
        }
      }
      if (auto it = body.find("top_k"); it != body.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<long long>() < 1) {
          return error_response(422, "E_MALFORMED", "'top_k' must be a positive integer");
        }
        top_k = it->get<std::size_t>();
      }
    } catch (const Error& e) {
      return error_response(422, to_string(e.code()), e.what());
    }
    if (sketch.views.empty()) return error_response(400, "E_EMPTY_SKETCH", "sketch has no views");

    const auto entries = s.lib.entries();
    const auto results = recommend(entries, sketch, filter, top_k);
    json list = json::array();
    for (const auto& r : results) {
      const auto idx = *s.lib.index_of_doi(r.doi);
      auto templ = detail::design_to_json(s.lib.corpus.items[idx]);
      list.push_back({{"rank", r.rank},
                      {"doi", r.doi},
                      {"score", r.score},
                      {"layout", r.layout.str()},
                      {"count", r.view_count},
                      {"template", {{"views", std::move(templ["views"])}}}});
    }
    return json_response(200, {{"results", std::move(list)}});
  }

  ApiResponse stats(const Snapshot& s, const std::string& metric, const ApiRequest& req) const {
    const auto& c = s.lib.corpus;
    if (metric == "frequency") {
      const auto freq = type_frequency(c);
      json f = json::object();
      for (auto t : all_view_types()) f[std::string(canonical_name(t))] = freq[index_of(t)];
      return json_response(200, {{"n", c.n()}, {"frequency", std::move(f)}});
    }
    if (metric == "counts") {
      const auto mode_name = param(req, "mode").value_or("leaf");
      if (mode_name != "leaf" && mode_name != "level1") throw BadRequest{"mode must be leaf or level1"};
      const auto hist = view_count_distribution(c, mode_name == "leaf" ? CountMode::LeafViews
                                                                       : CountMode::Level1Nodes);
      json h = json::object();
      for (int bucket = 2; bucket <= kCountBucketMax; ++bucket) h[count_key(bucket)] = 0;
      for (const auto& [bucket, n] : hist) h[count_key(bucket)] = n;
      return json_response(200, {{"n", c.n()}, {"mode", mode_name}, {"counts", std::move(h)}});
    }
    if (metric == "cooccurrence") {
      const auto m = conditional_probability(c);
      json types = json::array();
      json rows = json::array();
      json missing = json::array();
      for (auto i : all_view_types()) {
        types.push_back(canonical_name(i));
        if (m.column_missing(i)) missing.push_back(canonical_name(i));
        json row = json::array();
        for (auto j : all_view_types()) row.push_back(optional_number(m.at(i, j)));
        rows.push_back(std::move(row));
      }
      return json_response(200, {{"types", std::move(types)},
                                 {"matrix", std::move(rows)},
                                 {"missing_columns", std::move(missing)}});
    }
    if (metric == "aspect") {
      json out = json::object();
      for (const auto& [t, a] : aspect_stats(c)) {
        out[std::string(canonical_name(t))] = {{"n", a.samples.size()}, {"min", a.min}, {"q1", a.q1},
                                               {"median", a.median}, {"q3", a.q3}, {"max", a.max},
                                               {"mean", a.mean}};
      }
      return json_response(200, {{"display_range", {kAspectDisplayMin, kAspectDisplayMax}},
                                 {"aspect", std::move(out)}});
    }
    if (metric == "position") {
      json out = json::object();
      for (const auto& [t, g] : mean_position_by_type(c)) out[std::string(canonical_name(t))] = grid_json(g);
      return json_response(200, {{"position", std::move(out)}});
    }
    if (metric == "stability") {
      std::optional<LayoutCode> layout;
      if (auto l = param(req, "layout")) {
        layout = LayoutCode::parse(*l);
        if (!layout) throw BadRequest{"invalid layout code '" + *l + "'"};
      }
      auto stb = [&](ViewType t) {
        return layout ? stability(c, t, *layout, s.lib.codes) : stability(c, t);
      };
      json out{{"layout", layout ? json(layout->str()) : json(nullptr)}};
      if (auto t = param(req, "type")) {
        const auto type = require_type(*t);
        out["type"] = canonical_name(type);
        out["stability"] = optional_number(stb(type));
      } else {
        json all = json::object();
        for (auto type : all_view_types()) all[std::string(canonical_name(type))] = optional_number(stb(type));
        out["stability"] = std::move(all);
      }
      return json_response(200, out);
    }
    return error_response(404, "E_NOT_FOUND", "unknown metric '" + metric + "'");
  }

  ApiResponse thumbnail(const std::string& name) const {
    if (!cfg.thumbnails_dir || name.empty() || name.find('/') != std::string::npos ||
        name.find("..") != std::string::npos) {
      return error_response(404, "E_NOT_FOUND", "no such thumbnail");
    }
    std::ifstream in(*cfg.thumbnails_dir / name, std::ios::binary);
    if (!in) return error_response(404, "E_NOT_FOUND", "no such thumbnail");
    ApiResponse r;
    r.body.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    const auto ext = fs::path(name).extension().string();
    r.content_type = ext == ".png" ? "image/png" : ext == ".webp" ? "image/webp" : "image/jpeg";
    return r;
  }

  ApiResponse admin_reload(const ApiRequest& req) const {
    if (cfg.admin_token.empty()) return error_response(403, "E_FORBIDDEN", "reload is disabled");
    const auto it = req.headers.find("x-admin-token");
    if (it == req.headers.end() || it->second != cfg.admin_token) {
      return error_response(401, "E_UNAUTHORIZED", "missing or wrong admin token");
    }
    swap(load_corpus(cfg.corpus_dir, cfg.ingest));
    return json_response(200, {{"status", "reloaded"}, {"mvs", current()->lib.corpus.n()}});
  }

  ApiResponse route(const ApiRequest& req) const {
    const auto snap = current();
    const auto& path = req.path;
    const bool get = req.method == "GET" || req.method == "HEAD";
    const bool post = req.method == "POST";
    auto wrong_method = [] { return error_response(405, "E_METHOD", "method not allowed"); };

    if (path == "/mvs") return get ? list_mvs(*snap, req) : wrong_method();
    if (path.starts_with("/mv/")) return get ? mv_detail(*snap, path.substr(4)) : wrong_method();
    if (path == "/recommend") return post ? recommend_route(*snap, req) : wrong_method();
    if (path.starts_with("/stats/")) return get ? stats(*snap, path.substr(7), req) : wrong_method();
    if (path == "/admin/reload") return post ? admin_reload(req) : wrong_method();
    if (path.starts_with("/thumbnails/")) return get ? thumbnail(path.substr(12)) : wrong_method();
    return error_response(404, "E_NOT_FOUND", "no route for " + path);
  }

  ApiResponse handle(const ApiRequest& req) const {
    ApiResponse r;
    if (req.method == "OPTIONS") {
      r.status = 204;
      r.content_type.clear();
      r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
      r.headers["Access-Control-Allow-Headers"] = "Content-Type, X-Admin-Token";
    } else {
      try {
        r = route(req);
      } catch (const BadRequest& e) {
        r = error_response(400, "E_BAD_REQUEST", e.message);
      } catch (const Error& e) {
        const int status = e.code() == ErrorCode::EmptyCorpus ? 409
                         : e.code() == ErrorCode::EmptySketch ? 400
                                                               : 500;
        r = error_response(status, to_string(e.code()), e.what());
      } catch (const std::exception& e) {
        r = error_response(500, "E_INTERNAL", e.what());
      }
    }
    if (!cfg.cors_origin.empty()) r.headers["Access-Control-Allow-Origin"] = cfg.cors_origin;
    return r;
  }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->swap(load_corpus(impl_->cfg.corpus_dir, impl_->cfg.ingest));
}

Service::Service(ServiceConfig cfg, Library library) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->swap(std::move(library));
}

Service::~Service() { stop(); }

ApiResponse Service::dispatch(const ApiRequest& request) const { return impl_->handle(request); }

void Service::reload() const { impl_->swap(load_corpus(impl_->cfg.corpus_dir, impl_->cfg.ingest)); }

void Service::replace(Library library) const { impl_->swap(std::move(library)); }

std::size_t Service::corpus_size() const { return impl_->current()->lib.corpus.n(); }

int Service::bind() {
  auto handler = [this](const httplib::Request& in, httplib::Response& out) {
    ApiRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query.emplace_back(k, v);
    for (const auto& [k, v] : in.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      req.headers[key] = v;
    }
    req.body = in.body;
    const auto r = impl_->handle(req);
    out.status = r.status;
    for (const auto& [k, v] : r.headers) out.set_header(k, v);
    if (!r.content_type.empty()) out.set_content(r.body, r.content_type);
  };
  auto& server = impl_->server;
  server.Get(R"(/.*)", handler);
  server.Post(R"(/.*)", handler);
  server.Options(R"(/.*)", handler);

  const auto& cfg = impl_->cfg;
  const int port = cfg.port == 0 ? server.bind_to_any_port(cfg.host)
                                 : (server.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1);
  impl_->bound = port > 0;
  return port;
}

bool Service::run() {
  if (!impl_->bound) return false;
  return impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_->bound) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace mvlab
