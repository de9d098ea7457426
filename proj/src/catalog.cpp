#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "eseman/error.hpp"
#include "eseman/index.hpp"
#include "eseman/ingest.hpp"

namespace eseman {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw StoreError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw StoreError("corrupt " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<TreeInfo> describe_trees(const std::vector<Tree>& trees) {
  std::vector<TreeInfo> out;
  out.reserve(trees.size());
  for (const Tree& t : trees) {
    if (t.empty()) continue;
    out.push_back({t.tree_id, t.root().track_span.lo, t.root().key, t.nodes.size()});
  }
  return out;
}

HierIndex::HierIndex(std::shared_ptr<const Dataset> dataset, BuilderKind kind,
                     std::vector<TreeInfo> trees, std::shared_ptr<const NodeSource> source)
    : dataset_(std::move(dataset)),
      kind_(kind),
      trees_(std::move(trees)),
      source_(std::move(source)) {}

HierIndex HierIndex::in_memory(std::shared_ptr<const Dataset> dataset, BuilderKind kind,
                               std::vector<Tree> trees) {
  auto info = describe_trees(trees);
  return HierIndex(std::move(dataset), kind, std::move(info),
                   std::make_shared<TreeSource>(std::move(trees)));
}

std::uint64_t HierIndex::node_count() const {
  std::uint64_t n = 0;
  for (const auto& t : trees_) n += t.node_count;
  return n;
}

bool valid_dataset_name(const std::string& name) {
  if (name.empty() || name == "." || name == ".." || name.size() > 128) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

Catalog::Catalog(fs::path root) : root_(std::move(root)) {}

void Catalog::write_dataset(const Dataset& ds, const std::vector<Event>& events) {
  if (!valid_dataset_name(ds.name)) throw StoreError("invalid dataset name '" + ds.name + "'");
  const fs::path dir = root_ / ds.name;
  fs::create_directories(dir);

  json attrs = json::array();
  json schema = json::array();
  for (AttrKey k = 0; k < ds.attrs.key_count(); ++k) {
    json values = json::array();
    for (ValueId v = 0; v < ds.attrs.value_count(k); ++v) values.push_back(ds.attrs.value(k, v));
    const std::string kind(attr_kind_name(ds.attrs.kind(k)));
    attrs.push_back({{"name", ds.attrs.key_name(k)}, {"kind", kind}, {"values", values}});
    schema.push_back({{"name", ds.attrs.key_name(k)}, {"kind", kind}});
  }
  json labels = json::array();
  for (const auto& t : ds.tracks) labels.push_back(t.label);

  {
    const fs::path tmp = dir / "events.jsonl.tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    write_trace(out, ds, events);
    if (!out.flush()) throw StoreError("cannot write " + tmp.string());
    out.close();
    fs::rename(tmp, dir / "events.jsonl");
  }
  write_file(dir / "attrs.json", attrs.dump());
  const json manifest = {{"name", ds.name},
                         {"format_version", kFormatVersion},
                         {"tracks", labels},
                         {"events", ds.event_count},
                         {"time_extent", {ds.time_extent.begin, ds.time_extent.end}},
                         {"attr_schema", schema}};
  write_file(dir / "manifest.json", manifest.dump(2));
}

bool Catalog::has_dataset(const std::string& name) const {
  return valid_dataset_name(name) && fs::exists(root_ / name / "manifest.json");
}

Dataset Catalog::load_dataset(const std::string& name) const {
  if (!has_dataset(name)) throw NotFoundError("unknown dataset '" + name + "'");
  const fs::path dir = root_ / name;
  const json m = read_json(dir / "manifest.json");
  const json a = read_json(dir / "attrs.json");
  try {
    if (m.at("format_version").get<int>() != kFormatVersion) {
      throw StoreError("unsupported format version in " + (dir / "manifest.json").string());
    }
    Dataset ds;
    ds.name = m.at("name").get<std::string>();
    TrackIndex i = 0;
    for (const auto& label : m.at("tracks")) ds.tracks.push_back({i++, label.get<std::string>()});
    ds.event_count = m.at("events").get<std::uint64_t>();
    ds.time_extent = {m.at("time_extent").at(0).get<Timestamp>(),
                      m.at("time_extent").at(1).get<Timestamp>()};
    for (const auto& entry : a) {
      const auto kind = parse_attr_kind(entry.at("kind").get<std::string>());
      if (!kind) throw StoreError("bad attribute kind in " + (dir / "attrs.json").string());
      const AttrKey k = ds.attrs.declare(entry.at("name").get<std::string>(), *kind);
      for (const auto& v : entry.at("values")) ds.attrs.intern(k, v.get<std::string>());
    }
    return ds;
  } catch (const json::exception& e) {
    throw StoreError("corrupt manifest for '" + name + "': " + e.what());
  }
}

std::vector<Event> Catalog::load_events(const Dataset& ds) const {
  const fs::path path = root_ / ds.name / "events.jsonl";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());

  std::unordered_map<std::string, TrackIndex> track_of;
  for (const auto& t : ds.tracks) track_of.emplace(t.label, t.index);

  std::vector<Event> events;
  events.reserve(ds.event_count);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const TraceRecord r = decode_record(line);
    Event e;
    e.id = events.size();
    const auto t = track_of.find(r.track);
    if (t == track_of.end()) throw StoreError("event on unknown track '" + r.track + "'");
    e.track = t->second;
    e.enter = r.enter;
    e.leave = r.leave;
    for (const auto& [k, v] : r.attrs) {
      const auto key = ds.attrs.find_key(k);
      const auto value = key ? ds.attrs.find_value(*key, v) : std::nullopt;
      if (!value) throw StoreError("attribute " + k + "=" + v + " missing from dictionary");
      EventAttr at{*key, *value, 0.0};
      if (ds.attrs.kind(*key) == AttrKind::kNumeric) at.number = std::strtod(v.c_str(), nullptr);
      e.attrs.push_back(at);
    }
    std::sort(e.attrs.begin(), e.attrs.end(),
              [](const EventAttr& x, const EventAttr& y) { return x.key < y.key; });
    events.push_back(std::move(e));
  }
  if (events.size() != ds.event_count) {
    throw StoreError("event count mismatch for '" + ds.name + "': manifest " +
                     std::to_string(ds.event_count) + ", file " + std::to_string(events.size()));
  }
  return events;
}

std::uint64_t Catalog::build_index(const Dataset& ds, const std::vector<Event>& events,
                                   BuilderKind kind, std::uint64_t map_size, Execution exec) {
  const fs::path dir = root_ / ds.name / std::string(builder_name(kind));
  fs::create_directories(dir);
  fs::remove(dir / "manifest.json");
  fs::remove(dir / "data.kv");

  const std::vector<Tree> trees = build_trees(ds, events, kind, exec);
  {
    NodeStore store(StoreConfig{dir / "data.kv", map_size, false});
    store.put_trees(trees);
  }

  json info = json::array();
  std::uint64_t nodes = 0;
  for (const auto& t : describe_trees(trees)) {
    info.push_back({{"tree_id", t.tree_id},
                    {"track", t.track},
                    {"root", t.root.packed()},
                    {"nodes", t.node_count}});
    nodes += t.node_count;
  }
  const json manifest = {{"builder", std::string(builder_name(kind))},
                         {"format_version", kFormatVersion},
                         {"node_count", nodes},
                         {"map_size", map_size},
                         {"trees", info}};
  write_file(dir / "manifest.json", manifest.dump(2));
  return nodes;
}

bool Catalog::has_index(const std::string& name, BuilderKind kind) const {
  return valid_dataset_name(name) &&
         fs::exists(root_ / name / std::string(builder_name(kind)) / "manifest.json");
}

HierIndex Catalog::open_index(std::shared_ptr<const Dataset> ds, BuilderKind kind) const {
  const fs::path dir = root_ / ds->name / std::string(builder_name(kind));
  if (!has_index(ds->name, kind)) {
    throw NotFoundError("no " + std::string(builder_name(kind)) + " index for '" + ds->name + "'");
  }
  const json m = read_json(dir / "manifest.json");
  std::vector<TreeInfo> trees;
  try {
    if (m.at("builder").get<std::string>() != builder_name(kind) ||
        m.at("format_version").get<int>() != kFormatVersion) {
      throw StoreError("index manifest mismatch in " + dir.string());
    }
    for (const auto& t : m.at("trees")) {
      trees.push_back({t.at("tree_id").get<std::uint32_t>(), t.at("track").get<TrackIndex>(),
                       NodeKey::unpack(t.at("root").get<std::uint64_t>()),
                       t.at("nodes").get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    throw StoreError("corrupt index manifest in " + dir.string() + ": " + e.what());
  }
  auto store = std::make_shared<NodeStore>(StoreConfig{dir / "data.kv", 0, true});
  return HierIndex(std::move(ds), kind, std::move(trees), std::move(store));
}

std::vector<BuilderKind> Catalog::builders(const std::string& name) const {
  std::vector<BuilderKind> out;
  for (BuilderKind k : kAllBuilders) {
    if (has_index(name, k)) out.push_back(k);
  }
  return out;
}

std::vector<DatasetDescriptor> Catalog::list() const {
  std::vector<DatasetDescriptor> out;
  if (!fs::is_directory(root_)) return out;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && has_dataset(name)) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const Dataset ds = load_dataset(name);
    out.push_back({ds.name, ds.tracks.size(), ds.event_count, ds.time_extent, builders(name),
                   ds.attrs.schema()});
  }
  return out;
}

}  // namespace eseman
