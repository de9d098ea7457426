#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "eseman/index.hpp"
#include "eseman/server.hpp"
#include "eseman/wire.hpp"
#include "support/testing.hpp"

using namespace eseman;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Store {
  fs::path root;
  fixture::Sample sample;

  explicit Store(std::uint64_t events = 5'000, std::vector<BuilderKind> kinds = {kAllBuilders.begin(),
                                                                                 kAllBuilders.end()}) {
    static int n = 0;
    root = fs::temp_directory_path() /
           ("eseman_server_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(root);
    sample = fixture::random_sample(3, {4, static_cast<std::uint32_t>(events), 10'000'000, 5, true});
    sample.dataset->name = "demo";
    Catalog c(root);
    c.write_dataset(*sample.dataset, sample.events);
    for (BuilderKind k : kinds) c.build_index(*sample.dataset, sample.events, k, 64 << 20);
  }
  ~Store() { fs::remove_all(root); }
};

QueryParams params(TimeSpan w, std::string session = "") {
  QueryParams p{{"dataset", "demo"},
                {"begin", std::to_string(w.begin)},
                {"end", std::to_string(w.end)},
                {"canvas_px", "800"}};
  if (!session.empty()) p.emplace("session", session);
  return p;
}

}  // namespace

TEST(Service, EmptyStoreListsNothing) {
  const fs::path root = fs::temp_directory_path() / ("eseman_empty_" + std::to_string(::getpid()));
  fs::create_directories(root);
  QueryService svc{Catalog(root)};
  const HttpReply r = svc.datasets();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, "[]");
  fs::remove_all(root);
}

TEST(Service, DescriptorMatchesManifest) {
  Store st;
  QueryService svc{Catalog(st.root)};
  const json list = json::parse(svc.datasets().body);
  ASSERT_EQ(list.size(), 1u);
  const json& d = list[0];
  std::ifstream in(st.root / "demo" / "manifest.json");
  const json manifest = json::parse(in);
  EXPECT_EQ(d["name"], "demo");
  EXPECT_EQ(d["tracks"].get<std::uint64_t>(), manifest["tracks"].size());
  EXPECT_EQ(d["events"].get<std::uint64_t>(), 5'000u);
  EXPECT_EQ(d["events"], manifest["events"]);
  EXPECT_EQ(d["time_extent"][0].get<Timestamp>(), st.sample.dataset->time_extent.begin);
  EXPECT_EQ(d["time_extent"][1].get<Timestamp>(), st.sample.dataset->time_extent.end);
  EXPECT_EQ(d["builders"], json::array({"1dkdt", "kdt", "agg"}));
  EXPECT_EQ(d["attr_schema"]["function"], "categorical");
  EXPECT_EQ(d["attr_schema"]["bytes"], "numeric");
}

TEST(Service, StatusCodes) {
  Store st(2'000, {BuilderKind::kKdt1d});
  QueryService svc{Catalog(st.root)};
  EXPECT_EQ(svc.query(params({10, 10})).status, 400);
  EXPECT_EQ(svc.query(params({20, 10})).status, 400);
  auto p = params({0, 10});
  p.erase("begin");
  EXPECT_EQ(svc.query(p).status, 400);
  p = params({0, 10});
  p.find("begin")->second = "abc";
  EXPECT_EQ(svc.query(p).status, 400);
  p = params({0, 10});
  p.find("dataset")->second = "nope";
  EXPECT_EQ(svc.query(p).status, 404);
  p = params({0, 10});
  p.emplace("builder", "agg");
  EXPECT_EQ(svc.query(p).status, 404);
  p = params({0, 10});
  p.emplace("builder", "octree");
  EXPECT_EQ(svc.query(p).status, 400);
  p = params({0, 10});
  p.emplace("attr_key", "bytes");
  p.emplace("attr_value", "3");
  EXPECT_EQ(svc.query(p).status, 422);
  p = params({0, 10});
  p.emplace("attr_key", "color");
  p.emplace("attr_value", "3");
  EXPECT_EQ(svc.query(p).status, 400);
  p = params({0, 10});
  p.emplace("track_hi", "99");
  EXPECT_EQ(svc.query(p).status, 400);
  const HttpReply bad = svc.query(params({10, 10}));
  EXPECT_TRUE(json::parse(bad.body).contains("error"));
}

TEST(Service, EmptyRegion) {
  Store st(2'000, {BuilderKind::kKdt1d});
  QueryService svc{Catalog(st.root)};
  const Timestamp end = st.sample.dataset->time_extent.end;
  const HttpReply r = svc.query(params({end + 10, end + 20}));
  ASSERT_EQ(r.status, 200);
  const json body = json::parse(r.body);
  EXPECT_EQ(body["slices"], json::array());
  EXPECT_EQ(body["stats"]["bytes"], 2);
  for (const char* k : {"fetch_ns", "nodes", "hits", "bytes"}) EXPECT_TRUE(body["stats"].contains(k));
}

TEST(Service, SessionCacheServesRepeatedQuery) {
  Store st;
  QueryService svc{Catalog(st.root)};
  const auto p = params(st.sample.dataset->time_extent, "tab1");
  const json first = json::parse(svc.query(p).body);
  const json second = json::parse(svc.query(p).body);
  EXPECT_EQ(first["stats"]["hits"], 0);
  EXPECT_GT(second["stats"]["nodes"].get<int>(), 0);
  EXPECT_EQ(second["stats"]["hits"], second["stats"]["nodes"]);
  EXPECT_EQ(first["slices"], second["slices"]);
  // Another session starts cold.
  const json other = json::parse(svc.query(params(st.sample.dataset->time_extent, "tab2")).body);
  EXPECT_EQ(other["stats"]["hits"], 0);
  EXPECT_EQ(svc.session_count(), 2u);
  // Without a session nothing is reused.
  const json none = json::parse(svc.query(params(st.sample.dataset->time_extent)).body);
  EXPECT_EQ(none["stats"]["hits"], 0);
}

TEST(Service, SlicesEqualEngineOutput) {
  Store st;
  QueryService svc{Catalog(st.root)};
  Catalog c(st.root);
  auto ds = std::make_shared<const Dataset>(c.load_dataset("demo"));
  for (BuilderKind k : kAllBuilders) {
    const HierIndex index = c.open_index(ds, k);
    RangeQuery q = fixture::make_query(*ds, {1'000'000, 6'000'000}, 800);
    q.predicate = Predicate{"function", "fn0"};
    NodeCache cache;
    const QueryResult direct = range_query(q, index, cache);
    auto p = params(q.window);
    p.emplace("builder", std::string(builder_name(k)));
    p.emplace("attr_key", "function");
    p.emplace("attr_value", "fn0");
    const HttpReply r = svc.query(p);
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(json::parse(r.body)["slices"], json::parse(direct.payload));
  }
}

TEST(Service, QueuePolicySerializesSession) {
  Store st;
  QueryService svc{Catalog(st.root)};
  const auto p = params(st.sample.dataset->time_extent, "shared");
  const std::string expected = json::parse(svc.query(p).body)["slices"].dump();
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 5; ++j) {
        const HttpReply r = svc.query(p);
        if (r.status == 200 && json::parse(r.body)["slices"].dump() == expected) ++ok;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 30);
}

TEST(Service, RejectPolicyAnswersBusy) {
  Store st(150'000, {BuilderKind::kKdt1d});
  QueryService svc(Catalog(st.root), BusyPolicy::kReject);
  auto slow = params(st.sample.dataset->time_extent, "tab");
  slow.find("canvas_px")->second = "100000";
  const auto fast = params({0, 10}, "tab");
  bool saw_busy = false;
  for (int attempt = 0; attempt < 5 && !saw_busy; ++attempt) {
    std::atomic<bool> done{false};
    std::thread a([&] {
      svc.query(slow);
      done = true;
    });
    while (!done) {
      const HttpReply r = svc.query(fast);
      if (r.status == 409) saw_busy = true;
      EXPECT_TRUE(r.status == 200 || r.status == 409) << r.status;
    }
    a.join();
  }
  EXPECT_TRUE(saw_busy);
}

TEST(Http, EndpointsAndCors) {
  Store st(3'000, {BuilderKind::kKdt1d, BuilderKind::kKdt2d});
  QueryService svc{Catalog(st.root)};
  QueryServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.serve(); });
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 100 && !server.running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  auto ds = client.Get("/datasets");
  ASSERT_TRUE(ds);
  EXPECT_EQ(ds->status, 200);
  EXPECT_EQ(ds->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(json::parse(ds->body)[0]["name"], "demo");

  const TimeSpan x = st.sample.dataset->time_extent;
  const std::string path = "/query?dataset=demo&begin=" + std::to_string(x.begin) +
                           "&end=" + std::to_string(x.end) + "&canvas_px=600&session=s1";
  auto q1 = client.Get(path.c_str());
  auto q2 = client.Get(path.c_str());
  ASSERT_TRUE(q1 && q2);
  EXPECT_EQ(q1->status, 200);
  EXPECT_EQ(q1->get_header_value("Access-Control-Allow-Origin"), "*");
  const json b1 = json::parse(q1->body), b2 = json::parse(q2->body);
  EXPECT_EQ(b2["stats"]["hits"], b2["stats"]["nodes"]);
  // bytes counts the slice array exactly as sent
  const std::string_view raw(q1->body);
  const std::size_t lo = raw.find('['), hi = raw.rfind(",\"stats\":");
  EXPECT_EQ(b1["stats"]["bytes"].get<std::size_t>(), hi - lo);
  EXPECT_GT(b1["stats"]["fetch_ns"].get<std::uint64_t>(), 0u);

  auto kdt = client.Get((path + "&builder=kdt").c_str());
  ASSERT_TRUE(kdt);
  EXPECT_EQ(kdt->status, 200);
  auto bad = client.Get("/query?dataset=demo&begin=5&end=5");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto missing = client.Get("/query?dataset=zzz&begin=0&end=5");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto pre = client.Options("/query");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Origin"), "*");

  server.stop();
  t.join();
  EXPECT_FALSE(server.running());
}
