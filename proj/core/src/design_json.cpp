#include "design_json.hpp"

#include "mvlab/error.hpp"

namespace mvlab::detail {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::Malformed, what); }

json box_json(json obj, const BBox& b) {
  obj["x"] = b.x;
  obj["y"] = b.y;
  obj["w"] = b.w;
  obj["h"] = b.h;
  return obj;
}

BBox read_box(const json& obj) {
  BBox b;
  for (auto [key, field] : {std::pair{"x", &b.x}, {"y", &b.y}, {"w", &b.w}, {"h", &b.h}}) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) malformed(std::string("design view needs numeric '") + key + "'");
    *field = it->get<double>();
  }
  return b;
}

View read_view(const json& obj) {
  if (!obj.is_object()) malformed("design views must be objects");
  auto id = obj.find("id");
  auto type = obj.find("type");
  if (id == obj.end() || !id->is_string()) malformed("design view needs a string id");
  if (type == obj.end() || !type->is_string()) malformed("design view needs a type");
  auto parsed = parse_view_type(type->get<std::string>());
  if (!parsed) throw Error(ErrorCode::BadType, "unknown view type '" + type->get<std::string>() + "'");
  return {*parsed, read_box(obj), id->get<std::string>()};
}

}  // namespace

json metadata_to_json(const Metadata& m) {
  json obj{{"doi", m.doi}, {"venue", m.venue}, {"title", m.title}, {"authors", m.authors}};
  obj["year"] = m.year ? json(*m.year) : json(nullptr);
  return obj;
}

Metadata metadata_from_json(const json& obj) {
  if (!obj.is_object()) malformed("metadata must be an object");
  Metadata m;
  m.doi = obj.value("doi", "");
  m.venue = obj.value("venue", "");
  m.title = obj.value("title", "");
  if (auto it = obj.find("year"); it != obj.end() && it->is_number_integer()) m.year = it->get<int>();
  if (auto it = obj.find("authors"); it != obj.end() && it->is_array()) {
    for (const auto& a : *it) {
      if (a.is_string()) m.authors.push_back(a.get<std::string>());
    }
  }
  return m;
}

json design_to_json(const MVDesign& mv) {
  json views = json::array();
  for (const auto& node : mv.nodes) {
    if (const auto* v = std::get_if<View>(&node)) {
      views.push_back(box_json({{"id", v->id}, {"type", canonical_name(v->type)}}, v->bbox));
      continue;
    }
    const auto& sm = std::get<SmallMultiples>(node);
    json children = json::array();
    for (const auto& c : sm.children) {
      children.push_back(box_json({{"id", c.id}, {"type", canonical_name(c.type)}}, c.bbox));
    }
    views.push_back(box_json({{"id", std::to_string(sm.id)}, {"small multiples", std::move(children)}},
                             sm.bbox));
  }
  json obj{{"doi", mv.doi()}, {"views", std::move(views)}};
  if (mv.metadata) obj["metadata"] = metadata_to_json(*mv.metadata);
  return obj;
}

MVDesign design_from_json(const json& obj) {
  if (!obj.is_object()) malformed("design must be an object");
  auto views = obj.find("views");
  if (views == obj.end() || !views->is_array()) malformed("design needs a 'views' array");
  MVDesign mv;
  for (const auto& v : *views) {
    auto sm = v.find("small multiples");
    if (!v.is_object() || sm == v.end()) {
      mv.nodes.emplace_back(read_view(v));
      continue;
    }
    if (!sm->is_array()) malformed("'small multiples' must be an array");
    SmallMultiples group;
    auto id = v.find("id");
    if (id == v.end() || !id->is_string()) malformed("small multiples need a string id");
    try {
      group.id = std::stoi(id->get<std::string>());
    } catch (const std::exception&) {
      malformed("small multiples id must be an integer");
    }
    group.bbox = read_box(v);
    for (const auto& c : *sm) group.children.push_back(read_view(c));
    mv.nodes.emplace_back(std::move(group));
  }
  if (auto it = obj.find("metadata"); it != obj.end() && !it->is_null()) {
    mv.metadata = metadata_from_json(*it);
  } else if (auto doi = obj.find("doi"); doi != obj.end() && doi->is_string() && !doi->get<std::string>().empty()) {
    mv.metadata = Metadata{doi->get<std::string>(), {}, std::nullopt, {}, {}};
  }
  return mv;
}

}  // namespace mvlab::detail
