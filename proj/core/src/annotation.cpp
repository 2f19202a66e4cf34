#include "mvlab/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

using detail::json;

namespace {

constexpr const char* kSmallMultiplesKey = "small multiples";

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::Malformed, what); }

double require_number(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) malformed(where + ": missing numeric '" + key + "'");
  return it->get<double>();
}

PixelRect read_rect(const json& obj, const std::string& where) {
  PixelRect r{require_number(obj, "x", where), require_number(obj, "y", where),
              require_number(obj, "w", where), require_number(obj, "h", where)};
  if (!(r.w > 0.0) || !(r.h > 0.0)) {
    throw Error(ErrorCode::BadGeometry, where + ": nonpositive size");
  }
  return r;
}

bool has_rect(const json& obj) {
  return obj.contains("x") || obj.contains("y") || obj.contains("w") || obj.contains("h");
}

std::string read_id(const json& obj) {
  auto it = obj.find("id");
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number()) return it->dump();
  malformed("view id must be a string or a number");
}

std::optional<ViewType> read_type(const json& obj, const std::string& where) {
  auto it = obj.find("type");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(where + ": type must be a string");
  const auto name = it->get<std::string>();
  auto type = parse_view_type(name);
  if (!type) throw Error(ErrorCode::BadType, where + ": unknown view type '" + name + "'");
  return type;
}

RawView read_view(const json& obj, const std::string& default_id,
                  std::optional<ViewType> inherited_type, bool allow_group) {
  if (!obj.is_object()) malformed("view entries must be objects");
  RawView view;
  view.id = read_id(obj);
  if (view.id.empty()) view.id = default_id;
  const std::string where = "view " + view.id;
  view.type = read_type(obj, where);

  auto sm = obj.find(kSmallMultiplesKey);
  const bool is_group = sm != obj.end();
  if (is_group) {
    if (!allow_group) malformed(where + ": small multiples cannot be nested");
    if (!sm->is_array() || sm->empty()) malformed(where + ": 'small multiples' must be a non-empty array");
    const auto child_type = view.type ? view.type : inherited_type;
    int k = 1;
    for (const auto& child : *sm) {
      view.small_multiples.push_back(
          read_view(child, view.id + "." + std::to_string(k), child_type, false));
      ++k;
    }
    if (has_rect(obj)) view.rect = read_rect(obj, where);
  } else {
    if (!view.type) view.type = inherited_type;
    if (!view.type) malformed(where + ": missing 'type'");
    view.rect = read_rect(obj, where);
  }
  return view;
}

json rect_fields(json obj, const PixelRect& r) {
  obj["x"] = r.x;
  obj["y"] = r.y;
  obj["w"] = r.w;
  obj["h"] = r.h;
  return obj;
}

json write_view(const RawView& v) {
  json obj = json::object();
  obj["id"] = v.id;
  if (v.type) obj["type"] = std::string(canonical_name(*v.type));
  if (v.rect) obj = rect_fields(std::move(obj), *v.rect);
  if (v.is_group()) {
    json children = json::array();
    for (const auto& c : v.small_multiples) children.push_back(write_view(c));
    obj[kSmallMultiplesKey] = std::move(children);
  }
  return obj;
}

// Clip `r` to `display` and map the display onto the unit square.
std::optional<BBox> clip_and_map(const PixelRect& r, const PixelRect& display) {
  const double dl = display.left();
  const double dt = display.top();
  const double dr = display.right();
  const double db = display.bottom();
  const double l = std::max(r.left(), dl);
  const double t = std::max(r.top(), dt);
  const double rr = std::min(r.right(), dr);
  const double b = std::min(r.bottom(), db);
  if (rr <= l || b <= t) return std::nullopt;
  const double sx = dr - dl;
  const double sy = db - dt;
  return BBox::from_edges((l - dl) / sx, (t - dt) / sy, (rr - dl) / sx, (b - dt) / sy);
}

BBox enclosing(const std::vector<View>& views) {
  double l = views.front().bbox.left();
  double t = views.front().bbox.top();
  double r = views.front().bbox.right();
  double b = views.front().bbox.bottom();
  for (const auto& v : views) {
    l = std::min(l, v.bbox.left());
    t = std::min(t, v.bbox.top());
    r = std::max(r, v.bbox.right());
    b = std::max(b, v.bbox.bottom());
  }
  return BBox::from_edges(l, t, r, b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

AnnotatedMV parse_annotation(std::string_view bytes) {
  json root;
  try {
    root = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    malformed(std::string("not JSON: ") + e.what());
  }
  if (!root.is_object()) malformed("top level must be an object");

  AnnotatedMV a;
  if (auto it = root.find("doi"); it != root.end() && it->is_string()) a.doi = it->get<std::string>();

  auto display = root.find("display");
  if (display == root.end() || !display->is_object()) malformed("missing 'display'");
  a.display = read_rect(*display, "display");

  if (auto image = root.find("image"); image != root.end()) {
    if (!image->is_object()) malformed("'image' must be an object");
    a.image_w = require_number(*image, "w", "image");
    a.image_h = require_number(*image, "h", "image");
    if (!(a.image_w > 0.0) || !(a.image_h > 0.0)) {
      throw Error(ErrorCode::BadGeometry, "image: nonpositive size");
    }
  } else {
    a.image_w = a.display.right();
    a.image_h = a.display.bottom();
  }
  if (a.display.w > a.image_w || a.display.h > a.image_h) {
    throw Error(ErrorCode::BadGeometry, "display is larger than the image");
  }

  auto views = root.find("views");
  if (views == root.end() || !views->is_array()) malformed("missing 'views' array");
  int position = 1;
  for (const auto& v : *views) {
    a.views.push_back(read_view(v, std::to_string(position), std::nullopt, true));
    ++position;
  }

  std::set<std::string> ids;
  for (const auto& v : a.views) {
    if (!ids.insert(v.id).second) malformed("duplicate view id " + v.id);
    for (const auto& c : v.small_multiples) {
      if (!ids.insert(c.id).second) malformed("duplicate view id " + c.id);
    }
  }

  if (auto meta = root.find("metadata"); meta != root.end() && meta->is_object()) {
    Metadata m;
    m.doi = a.doi;
    if (auto it = meta->find("venue"); it != meta->end() && it->is_string()) m.venue = it->get<std::string>();
    if (auto it = meta->find("year"); it != meta->end() && it->is_number_integer()) m.year = it->get<int>();
    if (auto it = meta->find("title"); it != meta->end() && it->is_string()) m.title = it->get<std::string>();
    if (auto it = meta->find("authors"); it != meta->end() && it->is_array()) {
      for (const auto& author : *it) {
        if (author.is_string()) m.authors.push_back(author.get<std::string>());
      }
    }
    a.metadata = std::move(m);
  }
  return a;
}

std::string serialize_annotation(const AnnotatedMV& a) {
  json root = json::object();
  root["doi"] = a.doi;
  root["image"] = json{{"w", a.image_w}, {"h", a.image_h}};
  root["display"] = rect_fields(json::object(), a.display);
  json views = json::array();
  for (const auto& v : a.views) views.push_back(write_view(v));
  root["views"] = std::move(views);
  if (a.metadata) {
    json meta = json::object();
    meta["venue"] = a.metadata->venue;
    if (a.metadata->year) meta["year"] = *a.metadata->year;
    meta["title"] = a.metadata->title;
    meta["authors"] = a.metadata->authors;
    root["metadata"] = std::move(meta);
  }
  return detail::canonical_dump(root, detail::RealFormat::Fixed6);
}

NormalizeResult normalize(const AnnotatedMV& a) {
  if (!(a.display.w > 0.0) || !(a.display.h > 0.0)) {
    throw Error(ErrorCode::EmptyDisplay, "display rectangle has zero area");
  }
  NormalizeResult result;
  auto& mv = result.design;

  for (const auto& raw : a.views) {
    if (!raw.is_group()) {
      auto box = raw.rect ? clip_and_map(*raw.rect, a.display) : std::nullopt;
      if (!box) {
        result.warnings.push_back("view " + raw.id + " lies outside the display and was dropped");
        continue;
      }
      mv.nodes.emplace_back(View{raw.type.value_or(ViewType::Panel), *box, raw.id});
      continue;
    }
    std::vector<View> children;
    for (const auto& child : raw.small_multiples) {
      auto box = child.rect ? clip_and_map(*child.rect, a.display) : std::nullopt;
      if (!box) {
        result.warnings.push_back("view " + child.id + " lies outside the display and was dropped");
        continue;
      }
      children.push_back(View{child.type.value_or(ViewType::Panel), *box, child.id});
    }
    if (children.empty()) continue;
    if (children.size() == 1) {
      result.warnings.push_back("small multiples " + raw.id +
                                " kept a single view and became a plain view");
      mv.nodes.emplace_back(View{children.front().type, children.front().bbox, raw.id});
      continue;
    }
    SmallMultiples sm;
    try {
      sm.id = std::stoi(raw.id);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Malformed, "small multiples id '" + raw.id + "' is not an integer");
    }
    sm.bbox = enclosing(children);
    sm.children = std::move(children);
    mv.nodes.emplace_back(std::move(sm));
  }

  if (mv.nodes.empty()) throw Error(ErrorCode::AllClipped, "no view intersects the display");

  Metadata meta = a.metadata.value_or(Metadata{});
  meta.doi = a.doi;
  mv.metadata = std::move(meta);
  return result;
}

std::string doi_to_filename(std::string_view doi) {
  std::string out;
  for (char c : doi) {
    if (c == '/') {
      out += "%2F";
    } else if (c == '%') {
      out += "%25";
    } else {
      out += c;
    }
  }
  return out + ".json";
}

std::string doi_from_stem(std::string_view stem) {
  std::string out;
  for (std::size_t i = 0; i < stem.size(); ++i) {
    if (stem[i] == '%' && i + 2 < stem.size()) {
      const auto code = stem.substr(i + 1, 2);
      if (code == "2F" || code == "2f") {
        out += '/';
        i += 2;
        continue;
      }
      if (code == "25") {
        out += '%';
        i += 2;
        continue;
      }
    }
    out += stem[i];
  }
  return out;
}

std::map<std::string, Metadata> parse_corpus_index(std::string_view csv) {
  std::map<std::string, Metadata> index;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) return index;
  const auto header = split_csv_line(line);
  auto column = [&header](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto doi_col = column("doi");
  if (!doi_col) malformed("corpus index has no 'doi' column");
  const auto venue_col = column("venue");
  const auto year_col = column("year");
  const auto title_col = column("title");
  const auto authors_col = column("authors");

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    auto field = [&fields](std::optional<std::size_t> col) -> std::string {
      if (!col || *col >= fields.size()) return {};
      return trim(fields[*col]);
    };
    Metadata m;
    m.doi = field(doi_col);
    if (m.doi.empty()) continue;
    m.venue = field(venue_col);
    m.title = field(title_col);
    if (const auto year = field(year_col); !year.empty()) {
      try {
        m.year = std::stoi(year);
      } catch (const std::exception&) {
        malformed("corpus index: bad year '" + year + "'");
      }
    }
    if (const auto authors = field(authors_col); !authors.empty()) {
      std::istringstream names(authors);
      std::string name;
      while (std::getline(names, name, ';')) {
        if (auto t = trim(name); !t.empty()) m.authors.push_back(std::move(t));
      }
    }
    index[m.doi] = std::move(m);
  }
  return index;
}

void enrich_metadata(AnnotatedMV& a, const std::map<std::string, Metadata>& index) {
  auto it = index.find(a.doi);
  if (it == index.end()) return;
  const Metadata& row = it->second;
  Metadata m = a.metadata.value_or(Metadata{});
  m.doi = a.doi;
  if (m.venue.empty()) m.venue = row.venue;
  if (!m.year) m.year = row.year;
  if (m.title.empty()) m.title = row.title;
  if (m.authors.empty()) m.authors = row.authors;
  a.metadata = std::move(m);
}

}  // namespace mvlab
