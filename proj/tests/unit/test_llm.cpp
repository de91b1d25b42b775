#include <catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <thread>

#include <json.hpp>

#include "local_server.hpp"
#include "support.hpp"
#include "taxoforge/llm.hpp"
#include "taxoforge/llm_remote.hpp"

using namespace taxoforge;
using nlohmann::json;

namespace {

http::RetryPolicy fast_retry(int retries = 2) {
  http::RetryPolicy r;
  r.max_retries = retries;
  r.initial_backoff = std::chrono::milliseconds(1);
  r.timeout = std::chrono::seconds(5);
  return r;
}

}  // namespace

TEST_CASE("scripted backend", "[llm]") {
  ScriptedBackend b({{"List of Entities", "Organization\n  Hospital"}, {"", "fallback entry"}});
  Transcript tr;
  LlmClient client(b, tr);
  const auto r1 = client.complete("sys", "Here is the List of Entities: x");
  const auto r2 = client.complete("sys", "Here is the List of Entities: x");
  CHECK(r1.text == "Organization\n  Hospital");
  CHECK(r2.text == r1.text);
  CHECK(client.complete("", "other").text == "fallback entry");
  CHECK(tr.size() == 3);

  ScriptedBackend strict(std::vector<ScriptedBackend::Entry>{{"only", "x"}});
  Transcript tr2;
  LlmClient c2(strict, tr2);
  CHECK_THROWS_AS(c2.complete("", "nothing"), BackendError);
  CHECK(tr2.size() == 0);
  CHECK_THROWS_AS(c2.complete("", ""), InvalidArgument);
  auto req = c2.make_request("", "only");
  req.temperature = -1.0;
  CHECK_THROWS_AS(c2.complete(req), InvalidArgument);
}

TEST_CASE("script files", "[llm]") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "s.json", R"([{"match": "a", "response": "b"}])");
  CHECK(ScriptedBackend::load(dir / "s.json").entries().size() == 1);
  testsupport::write_file(dir / "bad.json", R"({"match": "a"})");
  CHECK_THROWS_AS(ScriptedBackend::load(dir / "bad.json"), ParseError);
  testsupport::write_file(dir / "bad2.json", R"([{"match": 3, "response": "b"}])");
  CHECK_THROWS_AS(ScriptedBackend::load(dir / "bad2.json"), ParseError);
  testsupport::write_file(dir / "bad3.json", "[");
  CHECK_THROWS_AS(ScriptedBackend::load(dir / "bad3.json"), ParseError);
  CHECK_THROWS_AS(ScriptedBackend::load(dir / "none.json"), IoError);
}

TEST_CASE("transcript lines", "[llm]") {
  testsupport::TempDir dir;
  ScriptedBackend b({}, std::string("ok"));
  Transcript tr(dir / "sub" / "t.jsonl");
  LlmClient client(b, tr, {"m1", 0.0, 77});
  for (int i = 0; i < 4; ++i) client.complete("s", "u" + std::to_string(i));
  const auto text = testsupport::read_file(dir / "sub" / "t.jsonl");
  CHECK(text == tr.str());
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  const auto first = json::parse(tr.lines()[0]);
  CHECK(first["request"]["model"] == "m1");
  CHECK(first["request"]["max_tokens"] == 77);
  CHECK(first["request"]["user"] == "u0");
  CHECK(first["response"]["text"] == "ok");
  CHECK(first["response"]["finish_reason"] == "stop");
}

TEST_CASE("name list parsing", "[llm]") {
  using V = std::vector<std::string>;
  CHECK(parse_name_list("1. Hospital\n2. Medical Clinic") == V{"Hospital", "Medical Clinic"});
  CHECK(parse_name_list("Hospital, hospital, HOSPITAL") == V{"Hospital"});
  CHECK(parse_name_list("Types: School; University") == V{"Types: School; University"});
  CHECK(parse_name_list("- \"Movie\"\n* Book\n\xE2\x80\xA2 `Song`\n3) Album") == V{"Movie", "Book", "Song", "Album"});
  CHECK(parse_name_list("  Medical   Clinic \r\n") == V{"Medical Clinic"});
  CHECK(parse_name_list("2019") == V{"2019"});
  CHECK_THROWS_AS(parse_name_list(" \n - \n,"), EmptyParse);

  // Parsing the rejoined output changes nothing.
  for (const char* s : {"1. Hospital\n2. Medical Clinic", "a, b, A, - c", "\"x\"\n'y'\n- - z"}) {
    const auto once = parse_name_list(s);
    std::string joined;
    for (const auto& n : once) joined += n + "\n";
    CHECK(parse_name_list(joined) == once);
  }
}

TEST_CASE("remote chat wire format", "[llm]") {
  testsupport::LocalServer srv;
  json last;
  std::string auth;
  srv.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    last = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    const std::string user = last["messages"].back()["content"];
    res.set_content(json{{"choices", {{{"message", {{"content", "echo:" + user}}}, {"finish_reason", "length"}}}}}.dump(),
                    "application/json");
  });
  srv.start();

  RemoteChatBackend b({srv.url(), "k", fast_retry()});
  CHECK(b.endpoint().path == "/v1/chat/completions");
  Transcript tr;
  LlmClient client(b, tr, {"model-x", 0.25, 64});
  const auto r = client.complete("be brief", "hello");
  CHECK(r.text == "echo:hello");
  CHECK(r.finish_reason == FinishReason::length);
  CHECK(auth == "Bearer k");
  CHECK(last["model"] == "model-x");
  CHECK(last["temperature"] == 0.25);
  CHECK(last["max_tokens"] == 64);
  REQUIRE(last["messages"].size() == 2);
  CHECK(last["messages"][0] == json{{"role", "system"}, {"content", "be brief"}});

  client.complete("", "again");
  CHECK(last["messages"].size() == 1);

  RemoteChatBackend with_path({srv.url("/v1"), "", fast_retry()});
  CHECK(with_path.endpoint().path == "/v1/chat/completions");
  CHECK(with_path.send(client.make_request("", "p")).text == "echo:p");
}

TEST_CASE("remote chat failures", "[llm]") {
  testsupport::LocalServer srv;
  std::atomic<int> flaky{0};
  srv.server.Post("/flaky/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++flaky < 3) {
      res.status = 429;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"fine"},"finish_reason":"stop"}]})", "application/json");
  });
  srv.server.Post("/down/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("no key", "text/plain");
  });
  srv.server.Post("/junk/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  srv.server.Post("/slow/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content("{}", "application/json");
  });
  srv.start();

  ChatRequest req;
  req.user = "x";
  CHECK(RemoteChatBackend({srv.url("/flaky"), "", fast_retry()}).send(req).text == "fine");
  CHECK(flaky == 3);

  try {
    RemoteChatBackend({srv.url("/down"), "", fast_retry()}).send(req);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 401);
  }
  CHECK_THROWS_AS(RemoteChatBackend({srv.url("/junk"), "", fast_retry()}).send(req), BackendError);

  auto slow = fast_retry(0);
  slow.timeout = std::chrono::seconds(1);
  CHECK_THROWS_AS(RemoteChatBackend({srv.url("/slow"), "", slow}).send(req), TimeoutError);

  // Nothing listens on port 9 of the loopback interface.
  CHECK_THROWS_AS(RemoteChatBackend({"http://127.0.0.1:9", "", fast_retry(0)}).send(req), BackendError);
  CHECK_THROWS_AS(RemoteChatBackend({"no-scheme", "", fast_retry()}), InvalidArgument);
}
