#include "json_util.hpp"

#include <cmath>
#include <cstdio>

namespace mvlab::detail {

namespace {

void write_real(std::string& out, double v, RealFormat reals) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  if (reals == RealFormat::RoundTrip) {
    out += json(v).dump();
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  out += s;
}

void write(std::string& out, const json& v, RealFormat reals, bool indent, int depth) {
  const auto newline = [&](int d) {
    if (!indent) return;
    out += '\n';
    out.append(static_cast<std::size_t>(d) * 2, ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      // nlohmann's default object type is a std::map, so iteration is sorted.
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent ? ": " : ":";
        write(out, it.value(), reals, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        write(out, item, reals, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float:
      write_real(out, v.get<double>(), reals);
      return;
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string canonical_dump(const json& value, RealFormat reals, bool indent) {
  std::string out;
  write(out, value, reals, indent, 0);
  out += '\n';
  return out;
}

}  // namespace mvlab::detail
