#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "treasure/decision_log.hpp"
#include "treasure/http_server.hpp"
#include "treasure/session.hpp"

using namespace treasure;
using namespace treasure::server;

namespace {

SessionSpec spec(int humans, int bots, Condition c = Condition::Protection, int games = 1, int rounds = 5) {
  SessionSpec s;
  s.condition = c;
  s.seed = 1234;
  s.map_id = 2;
  s.games = games;
  s.rounds = rounds;
  for (int h = 0; h < humans; ++h) s.seats.push_back({true, {}});
  for (int b = 0; b < bots; ++b) s.seats.push_back({false, {20, 25}});
  return s;
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const SessionError& e) {
    return e.code;
  }
  return "none";
}

// A cell of the library map that holds no treasure.
HexCoord empty_cell(int map_id) {
  const TreasureMap m = library_map(map_id);
  const auto lookup = m.mine_lookup();
  for (int i = 0; i < m.dims.cell_count(); ++i)
    if (lookup[i] < 0) return m.dims.coord(i);
  return {};
}

std::vector<DecisionRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  return read_log(in);
}

}  // namespace

TEST(SessionSpecJson, AcceptsEverySeatForm) {
  const auto s = SessionSpec::from_json(json::parse(R"({
    "condition": "no_protection", "map_id": 3, "seed": 9, "games": 2, "rounds": 10,
    "seats": ["human", {"type": "human"}, {"type": "bot", "initial": 15, "sequential": 30}, {"type": "bot"}]
  })"));
  EXPECT_EQ(s.condition, Condition::NoProtection);
  ASSERT_EQ(s.seats.size(), 4u);
  EXPECT_TRUE(s.seats[0].human && s.seats[1].human);
  EXPECT_EQ(s.seats[2].bot, (Strategy{15, 30}));
  EXPECT_EQ(s.seats[3].bot, (Strategy{20, 20}));
  EXPECT_EQ(*s.map_id, 3);
}

TEST(SessionSpecJson, RejectsBadBodies) {
  for (const char* body : {R"([])", R"({"seats":["human"]})", R"({"condition":"marsh","seats":["human"]})",
                           R"({"condition":"protection","seats":[]})", R"({"condition":"protection","seats":["alien"]})",
                           R"({"condition":"protection","seats":["human"],"rounds":0})",
                           R"({"condition":"protection","seats":["human"],"map_id":10})",
                           R"({"condition":"protection","seats":[{"type":"bot","initial":50}]})"}) {
    EXPECT_EQ(code_of([&] { SessionSpec::from_json(json::parse(body)).validate(); }), "validation") << body;
  }
}

TEST(Library, MapsAreFixedAndValid) {
  for (int id = 0; id < kLibrarySize; ++id) {
    EXPECT_EQ(library_map(id), library_map(id));
    EXPECT_TRUE(validate_map(library_map(id)).empty());
  }
  EXPECT_NE(library_map(0), library_map(1));
}

TEST(Sessions, AllBotSessionsPlayThroughAndReplay) {
  for (Condition c : {Condition::Protection, Condition::NoProtection, Condition::Singleton}) {
    SessionManager m({std::nullopt, 5});
    const Created cr = m.create(spec(0, 4, c, 4, 50));
    EXPECT_TRUE(cr.tokens.empty());
    EXPECT_EQ(cr.phase, Phase::Finished);
    const auto log = parse_csv(m.log_csv(cr.id));
    ASSERT_EQ(log.size(), 4u * 50 * 4);
    for (int g = 1; g <= 4; ++g) {
      std::vector<DecisionRecord> game;
      for (const DecisionRecord& r : log)
        if (r.game_index == g) game.push_back(r);
      GameConfig cfg;
      cfg.condition = c;
      cfg.seed = 1234;
      cfg.game_index = g;
      cfg.map_id = (2 + g - 1) % kLibrarySize;
      EXPECT_EQ(game.front().map_id, cfg.map_id);
      EXPECT_EQ(replay_game(cfg, library_map(cfg.map_id), game), game);
    }
  }
}

TEST(Sessions, HumanSeatFlow) {
  SessionManager m({std::nullopt, 1});
  const Created cr = m.create(spec(1, 3));
  ASSERT_EQ(cr.tokens.size(), 1u);
  EXPECT_EQ(cr.tokens[0].second.size(), 32u);
  EXPECT_EQ(cr.id.size(), 16u);
  EXPECT_EQ(cr.phase, Phase::Lobby);
  const std::string tok = cr.tokens[0].second;
  EXPECT_EQ(m.join(cr.id, tok)["phase"], "awaiting_moves");

  const json v = m.view(cr.id, tok);
  EXPECT_EQ(v["round"], 1);
  EXPECT_EQ(v["submitted"], false);
  EXPECT_EQ(v["board"]["width"], 70);
  EXPECT_TRUE(v["board"]["cells"].empty());
  const int cost = v["cost"];
  EXPECT_GE(cost, 5);
  EXPECT_LE(cost, 35);

  const json first = m.poll(cr.id, tok, 0);
  ASSERT_EQ(first["messages"].size(), 1u);
  EXPECT_EQ(first["messages"][0]["type"], "round_start");
  EXPECT_EQ(first["messages"][0]["cost"], cost);
  EXPECT_EQ(first["messages"][0]["seq"], 0);

  for (int r = 1; r <= 5; ++r) {
    EXPECT_EQ(m.submit_move(cr.id, tok, r, Move::skip())["ok"], true);
  }
  EXPECT_EQ(m.phase(cr.id), Phase::Finished);
  const json all = m.poll(cr.id, tok, 0);
  std::vector<std::string> types;
  for (const json& msg : all["messages"]) types.push_back(msg["type"]);
  EXPECT_EQ(types.back(), "session_over");
  EXPECT_EQ(std::count(types.begin(), types.end(), "round_result"), 5);
  EXPECT_EQ(std::count(types.begin(), types.end(), "game_over"), 1);
  EXPECT_EQ(parse_csv(m.log_csv(cr.id)).size(), 20u);
  EXPECT_EQ(code_of([&] { m.submit_move(cr.id, tok, 6, Move::skip()); }), "phase");
}

TEST(Sessions, ErrorCodes) {
  SessionManager m({std::nullopt, 2});
  const Created cr = m.create(spec(2, 2));
  const std::string a = cr.tokens[0].second, b = cr.tokens[1].second;
  EXPECT_EQ(code_of([&] { m.view("nope", a); }), "not_found");
  EXPECT_EQ(code_of([&] { m.view(cr.id, "forged"); }), "auth");
  EXPECT_EQ(code_of([&] { m.submit_move(cr.id, a, 1, Move::skip()); }), "phase");  // b has not joined
  m.join(cr.id, b);
  EXPECT_EQ(m.phase(cr.id), Phase::AwaitingMoves);
  EXPECT_EQ(code_of([&] { m.submit_move(cr.id, a, 2, Move::skip()); }), "out_of_sync");
  EXPECT_EQ(code_of([&] { m.submit_move(cr.id, a, 1, Move::search({70, 0})); }), "illegal_cell");
  m.submit_move(cr.id, a, 1, Move::skip());
  EXPECT_EQ(code_of([&] { m.submit_move(cr.id, a, 1, Move::skip()); }), "duplicate");
  EXPECT_EQ(m.view(cr.id, a)["message"], "wait for the other players");
  EXPECT_EQ(code_of([&] { m.handle_message(cr.id, json{{"type", "dance"}}); }), "validation");
  EXPECT_EQ(code_of([&] { m.handle_message(cr.id, json{{"type", "move"}, {"token", b}, {"action", "skip"}}); }),
            "validation");
  EXPECT_EQ(m.handle_message(cr.id, json{{"type", "move"}, {"token", b}, {"round", 1}, {"action", "skip"}})["round"], 1);
  EXPECT_EQ(m.view(cr.id, a)["round"], 2);
  const SessionError e("auth", 403, "x");
  EXPECT_EQ(e.to_json(), (json{{"type", "error"}, {"code", "auth"}, {"detail", "x"}}));
}

// Failures are private: nothing seat 1 can read mentions seat 0's failed cell.
TEST(Sessions, FailuresNeverReachOtherSeats) {
  SessionManager m({std::nullopt, 3});
  const Created cr = m.create(spec(2, 2, Condition::NoProtection));
  const std::string a = cr.tokens[0].second, b = cr.tokens[1].second;
  m.join(cr.id, a);
  m.join(cr.id, b);
  const HexCoord hole = empty_cell(2);
  const json cell = json::array({hole.col, hole.row});
  m.submit_move(cr.id, a, 1, Move::search(hole));
  m.submit_move(cr.id, b, 1, Move::skip());
  const json va = m.view(cr.id, a), vb = m.view(cr.id, b);
  EXPECT_NE(va["board"]["cells"].dump().find(cell.dump()), std::string::npos);
  EXPECT_EQ(vb["board"]["cells"].dump().find(cell.dump()), std::string::npos);
  EXPECT_EQ(m.poll(cr.id, b, 0)["messages"].dump().find(cell.dump()), std::string::npos);
  EXPECT_NE(m.poll(cr.id, a, 0)["messages"].dump().find(R"("color":"black")"), std::string::npos);
}

TEST(Sessions, TimeoutsAutoSkipLateSeats) {
  SessionManager m({std::nullopt, 4});
  SessionSpec s = spec(2, 2);
  s.timeout_ms = 50;
  const Created cr = m.create(s);
  m.join(cr.id, cr.tokens[0].second);
  m.join(cr.id, cr.tokens[1].second);
  m.submit_move(cr.id, cr.tokens[0].second, 1, Move::skip());
  EXPECT_EQ(m.tick(Clock::now()), 0);
  EXPECT_EQ(m.tick(Clock::now() + std::chrono::seconds(1)), 1);
  EXPECT_EQ(m.view(cr.id, cr.tokens[0].second)["round"], 2);
  for (int r = 2; r <= 5; ++r) EXPECT_EQ(m.tick(Clock::now() + std::chrono::hours(r)), 2);
  EXPECT_EQ(m.phase(cr.id), Phase::Finished);
}

TEST(Sessions, LongPollWakesOnNewMessages) {
  SessionManager m({std::nullopt, 6});
  const Created cr = m.create(spec(2, 2));
  const std::string a = cr.tokens[0].second, b = cr.tokens[1].second;
  m.join(cr.id, a);
  m.join(cr.id, b);
  m.submit_move(cr.id, a, 1, Move::skip());
  std::thread later([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    m.submit_move(cr.id, b, 1, Move::skip());
  });
  const json got = m.poll(cr.id, a, 1, std::chrono::seconds(10));
  later.join();
  ASSERT_FALSE(got["messages"].empty());
  EXPECT_EQ(got["messages"][0]["type"], "round_result");
  EXPECT_EQ(got["messages"][0]["seq"], 1);
}

TEST(Sessions, LogDirectoryHoldsCsvAndManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "treasure_server_test";
  std::filesystem::remove_all(dir);
  SessionManager m({dir, 7});
  const Created cr = m.create(spec(0, 4, Condition::Protection, 2, 10));
  std::ifstream csv(dir / (cr.id + ".csv"));
  std::stringstream text;
  text << csv.rdbuf();
  EXPECT_EQ(text.str(), m.log_csv(cr.id));
  const json manifest = json::parse(std::ifstream(dir / (cr.id + ".json")));
  EXPECT_EQ(manifest["phase"], "finished");
  EXPECT_EQ(manifest["map_ids"], json::array({2, 3}));
  EXPECT_EQ(manifest["seed"], 1234);
  std::filesystem::remove_all(dir);
}

TEST(Sessions, SameTokenSeedSameIds) {
  SessionManager a({std::nullopt, 99}), b({std::nullopt, 99});
  const Created x = a.create(spec(1, 3)), y = b.create(spec(1, 3));
  EXPECT_EQ(x.id, y.id);
  EXPECT_EQ(x.tokens, y.tokens);
}

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_any("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.serve(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  SessionManager sessions_{ManagerOptions{std::nullopt, 11}};
  HttpServer server_{sessions_, HttpOptions{std::nullopt, 2000}};
  int port_ = -1;
  std::thread thread_;
};

TEST_F(Http, HealthAndNotFound) {
  auto c = client();
  auto h = c.Get("/health");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  EXPECT_EQ(json::parse(h->body)["status"], "ok");
  auto nf = c.Get("/sessions/abc/view?token=x");
  ASSERT_TRUE(nf);
  EXPECT_EQ(nf->status, 404);
  EXPECT_EQ(json::parse(nf->body)["code"], "not_found");
}

TEST_F(Http, FullRoundTrip) {
  auto c = client();
  const std::string body = R"({"condition":"protection","map_id":1,"seed":5,"games":1,"rounds":3,
    "seats":["human",{"type":"bot"},{"type":"bot"},{"type":"bot"}]})";
  auto created = c.Post("/sessions", body, "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201) << created->body;
  const json cj = json::parse(created->body);
  const std::string id = cj["id"], tok = cj["tokens"][0]["token"];

  auto bad = c.Post("/sessions", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto join = c.Post("/sessions/" + id + "/messages", json{{"type", "join"}, {"token", tok}}.dump(), "application/json");
  ASSERT_TRUE(join);
  EXPECT_EQ(join->status, 200);

  httplib::Headers forged{{"X-Seat-Token", "forged"}};
  auto denied = c.Get("/sessions/" + id + "/view", forged);
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 403);

  for (int r = 1; r <= 3; ++r) {
    auto v = c.Get("/sessions/" + id + "/view?token=" + tok);
    ASSERT_TRUE(v);
    EXPECT_EQ(json::parse(v->body)["round"], r);
    auto mv = c.Post("/sessions/" + id + "/moves", json{{"token", tok}, {"round", r}, {"action", "skip"}}.dump(),
                     "application/json");
    ASSERT_TRUE(mv);
    EXPECT_EQ(mv->status, 200) << mv->body;
  }
  auto stale = c.Post("/sessions/" + id + "/moves", json{{"token", tok}, {"round", 1}, {"action", "skip"}}.dump(),
                      "application/json");
  ASSERT_TRUE(stale);
  EXPECT_EQ(stale->status, 409);

  auto msgs = c.Get("/sessions/" + id + "/messages?token=" + tok + "&since=0&wait_ms=100");
  ASSERT_TRUE(msgs);
  EXPECT_EQ(json::parse(msgs->body)["messages"].back()["type"], "session_over");

  auto log = c.Get("/sessions/" + id + "/log");
  ASSERT_TRUE(log);
  EXPECT_EQ(log->get_header_value("Content-Type").rfind("text/csv", 0), 0u);
  EXPECT_EQ(parse_csv(log->body).size(), 12u);
}

TEST_F(Http, IllegalCellIsUnprocessable) {
  auto c = client();
  const std::string body = R"({"condition":"protection","seed":5,"games":1,"rounds":3,"seats":["human","human"]})";
  const json cj = json::parse(c.Post("/sessions", body, "application/json")->body);
  const std::string id = cj["id"], tok = cj["tokens"][0]["token"];
  c.Post("/sessions/" + id + "/messages", json{{"type", "join"}, {"token", cj["tokens"][1]["token"]}}.dump(),
         "application/json");
  auto r = c.Post("/sessions/" + id + "/moves",
                  json{{"token", tok}, {"round", 1}, {"action", "search"}, {"cell", {-1, 0}}}.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(json::parse(r->body)["code"], "illegal_cell");
}

TEST(HttpBind, OccupiedPortIsReported) {
  SessionManager m;
  HttpServer first(m), second(m);
  const int port = first.bind_any("127.0.0.1");
  ASSERT_GT(port, 0);
  EXPECT_FALSE(second.bind("127.0.0.1", port));
}
