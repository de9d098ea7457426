#include "eseman/wire.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace eseman {
namespace {

template <typename T>
void append_number(std::string& out, T v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  append_number(out, v);
}

void append_string(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char esc[8];
          std::snprintf(esc, sizeof(esc), "\\u%04x", c);
          out += esc;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void append_attrs(std::string& out, const AttrSummary& attrs, const AttrDictionary& dict) {
  out += '{';
  bool first = true;
  for (const AttrEntry& e : attrs.entries()) {
    if (!first) out += ',';
    first = false;
    append_string(out, dict.key_name(e.key));
    out += ':';
    if (e.kind == AttrKind::kCategorical) {
      out += '[';
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        if (i) out += ',';
        append_string(out, dict.value(e.key, e.values[i]));
      }
      out += ']';
    } else {
      out += "{\"min\":";
      append_double(out, e.stats.min);
      out += ",\"max\":";
      append_double(out, e.stats.max);
      out += ",\"mean\":";
      append_double(out, e.stats.mean);
      out += ",\"count\":";
      append_number(out, e.stats.count);
      out += '}';
    }
  }
  out += '}';
}

}  // namespace

void append_slices_json(std::string& out, const std::vector<SummarySlice>& slices,
                        const AttrDictionary& dict) {
  out += '[';
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const SummarySlice& s = slices[i];
    if (i) out += ',';
    out += "{\"track_lo\":";
    append_number(out, s.track_span.lo);
    out += ",\"track_hi\":";
    append_number(out, s.track_span.hi);
    out += ",\"begin\":";
    append_number(out, s.time_span.begin);
    out += ",\"end\":";
    append_number(out, s.time_span.end);
    out += ",\"count\":";
    append_number(out, s.event_count);
    out += s.is_exact_event ? ",\"exact\":true" : ",\"exact\":false";
    if (s.is_exact_event) {
      out += ",\"id\":";
      append_number(out, s.event_id);
    }
    out += ",\"attrs\":";
    append_attrs(out, s.attrs, dict);
    out += '}';
  }
  out += ']';
}

std::string stats_json(const FetchStats& s) {
  std::string out = "{\"fetch_ns\":";
  append_number(out, s.fetch_time_ns);
  out += ",\"nodes\":";
  append_number(out, s.nodes_visited);
  out += ",\"hits\":";
  append_number(out, s.cache_hits);
  out += ",\"bytes\":";
  append_number(out, s.bytes_returned);
  out += ",\"slices\":";
  append_number(out, s.slices_returned);
  out += '}';
  return out;
}

std::string query_response_json(const QueryResult& r) {
  std::string out;
  out.reserve(r.payload.size() + 128);
  out += "{\"slices\":";
  out += r.payload;
  out += ",\"stats\":";
  out += stats_json(r.stats);
  out += '}';
  return out;
}

std::string datasets_json(const std::vector<DatasetDescriptor>& list) {
  std::string out = "[";
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& d = list[i];
    if (i) out += ',';
    out += "{\"name\":";
    append_string(out, d.name);
    out += ",\"tracks\":";
    append_number(out, d.tracks);
    out += ",\"events\":";
    append_number(out, d.events);
    out += ",\"time_extent\":[";
    append_number(out, d.time_extent.begin);
    out += ',';
    append_number(out, d.time_extent.end);
    out += "],\"builders\":[";
    for (std::size_t b = 0; b < d.builders.size(); ++b) {
      if (b) out += ',';
      append_string(out, builder_name(d.builders[b]));
    }
    out += "],\"attr_schema\":{";
    for (std::size_t a = 0; a < d.attr_schema.size(); ++a) {
      if (a) out += ',';
      append_string(out, d.attr_schema[a].name);
      out += ':';
      append_string(out, attr_kind_name(d.attr_schema[a].kind));
    }
    out += "}}";
  }
  out += ']';
  return out;
}

std::string error_json(const std::string& message) {
  std::string out = "{\"error\":";
  append_string(out, message);
  out += '}';
  return out;
}

}  // namespace eseman
