#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "idas/error.hpp"
#include "idas/http.hpp"
#include "idas/llm_gateway.hpp"
#include "test_support.hpp"

using namespace idas;
using testing_support::fallback_backend;
using testing_support::fixed_backend;
using testing_support::scripted;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Template, RendersSlots) {
  const auto t = PromptTemplate::parse("t", "Q: {q}");
  EXPECT_EQ(render(t, {{"q", "x"}}), "Q: x");
}

TEST(Template, NoSlotsIsIdentity) {
  const auto t = PromptTemplate::parse("t", "plain {not a slot} {1bad} text");
  EXPECT_TRUE(t.required_slots.empty());
  EXPECT_EQ(render(t, {}), "plain {not a slot} {1bad} text");
}

TEST(Template, MissingAndUnknownSlots) {
  const auto t = PromptTemplate::parse("t", "{q} and {ctx}");
  EXPECT_EQ(t.required_slots, (std::set<std::string>{"q", "ctx"}));
  EXPECT_EQ(code_of([&] { render(t, {{"q", "x"}}); }), ErrorCode::MissingSlot);
  EXPECT_EQ(code_of([&] { render(t, {{"q", "x"}, {"ctx", "y"}, {"z", "w"}}); }), ErrorCode::UnknownSlot);
}

TEST(Template, SinglePassSubstitution) {
  const auto t = PromptTemplate::parse("t", "{a}|{b}|{a}");
  EXPECT_EQ(render(t, {{"a", "{b}"}, {"b", "2"}}), "{b}|2|{b}");
}

TEST(TemplateStore, LoadsDirectory) {
  const auto store = TemplateStore::load_dir(testing_support::templates_dir());
  for (const char* name : {"draft", "refine", "question_gen", "answer_gen", "exam_answer"}) {
    EXPECT_TRUE(store.contains(name)) << name;
  }
  EXPECT_EQ(store.get("refine").required_slots, (std::set<std::string>{"question", "draft", "context"}));
  EXPECT_EQ(code_of([&] { store.get("missing"); }), ErrorCode::UnknownTemplate);
}

TEST(ExtractContext, JoinsRegions) {
  const std::string prompt = "head <<<CONTEXT\n one \nCONTEXT>>> mid <<<CONTEXT two CONTEXT>>> tail";
  EXPECT_EQ(extract_context(prompt), "one\n\ntwo");
  EXPECT_EQ(extract_context("no markers"), "");
}

TEST(Scripted, EchoFixedAndRules) {
  EXPECT_EQ(complete(fallback_backend(FallbackMode::Echo), "", "hello").response, "hello");
  EXPECT_EQ(complete(fixed_backend("A"), "", "anything").response, "A");

  Script s;
  s.rules.push_back({MatchKind::Substring, "3454", "Traction loss: reset the converter."});
  s.rules.push_back({MatchKind::Pattern, R"(code ([0-9]+) on (\w+))", "fault $1 / $2 / [$&]"});
  const auto b = scripted(s);
  EXPECT_EQ(complete(b, "", "fault 3454 on CR400AF").response, "Traction loss: reset the converter.");
  EXPECT_EQ(complete(b, "", "code 2107 on CRH380B").response, "fault 2107 / CRH380B / [code 2107 on CRH380B]");
  EXPECT_EQ(code_of([&] { complete(b, "", "unrelated"); }), ErrorCode::NoRuleMatched);
}

TEST(Scripted, EmptyInputsAndResponses) {
  EXPECT_EQ(code_of([] { complete(fixed_backend("A"), "", ""); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { complete(fixed_backend(""), "", "q"); }), ErrorCode::ResponseEmpty);
  EXPECT_EQ(code_of([] { complete(fallback_backend(FallbackMode::EchoContext), "", "no context"); }),
            ErrorCode::ResponseEmpty);
}

TEST(Scripted, ParsesScriptJson) {
  const auto s = parse_script(nlohmann::json::parse(R"js({
    "rules": [{"contains": "a", "response": "A"}, {"pattern": "b(c)", "response": "$1"}],
    "fallback": {"fixed": "F"}})js"));
  ASSERT_EQ(s.rules.size(), 2u);
  EXPECT_EQ(s.rules[1].kind, MatchKind::Pattern);
  EXPECT_EQ(s.fallback, FallbackMode::Fixed);
  EXPECT_EQ(s.fixed_text, "F");
  EXPECT_EQ(parse_script(nlohmann::json::parse(R"({"fallback":"echo_context"})")).fallback,
            FallbackMode::EchoContext);
  EXPECT_THROW(parse_script(nlohmann::json::parse(R"({"fallback":"sometimes"})")), Error);
  EXPECT_THROW(parse_script(nlohmann::json::parse(R"({"rules":[{"response":"x"}]})")), Error);
}

TEST(Scripted, FixtureScriptLoads) {
  const auto s = load_script(testing_support::fixtures_dir() / "script.json");
  EXPECT_EQ(s.fallback, FallbackMode::EchoContext);
  EXPECT_FALSE(s.rules.empty());
}

TEST(Http, ParsesUrls) {
  const auto t = http::parse_url("http://localhost:8081/v1/chat/completions");
  EXPECT_EQ(t.origin, "http://localhost:8081");
  EXPECT_EQ(t.path, "/v1/chat/completions");
  EXPECT_EQ(http::parse_url("https://api.example.com").path, "/");
  EXPECT_THROW(http::parse_url("ftp://x/y"), Error);
  EXPECT_TRUE(http::is_transient(0));
  EXPECT_TRUE(http::is_transient(429));
  EXPECT_TRUE(http::is_transient(502));
  EXPECT_FALSE(http::is_transient(400));
  EXPECT_FALSE(http::is_transient(200));
}

TEST(Remote, ParsesChatCompletion) {
  nlohmann::json seen;
  std::string auth;
  testing_support::StubServer stub([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen = nlohmann::json::parse(req.body);
      auth = req.get_header_value("Authorization");
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"stub answer"}}]})",
                      "application/json");
    });
  });
  ::setenv("IDAS_TEST_CHAT_KEY", "k-123", 1);
  BackendSpec b;
  b.kind = BackendKind::Remote;
  b.endpoint_url = stub.url("/v1/chat/completions");
  b.model_name = "m";
  b.api_key_env = "IDAS_TEST_CHAT_KEY";
  const auto ex = complete(b, "sys", "user text", {0.5, 77});
  EXPECT_EQ(ex.response, "stub answer");
  EXPECT_EQ(ex.backend, BackendKind::Remote);
  EXPECT_EQ(auth, "Bearer k-123");
  EXPECT_EQ(seen["model"], "m");
  EXPECT_EQ(seen["max_tokens"], 77);
  EXPECT_EQ(seen["temperature"], 0.5);
  ASSERT_EQ(seen["messages"].size(), 2u);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][1]["content"], "user text");
}

TEST(Remote, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  testing_support::StubServer stub([&](httplib::Server& s) {
    s.Post("/c", [&](const httplib::Request&, httplib::Response& res) {
      if (++calls < 3) {
        res.status = 429;
        return;
      }
      res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
    });
  });
  BackendSpec b;
  b.kind = BackendKind::Remote;
  b.endpoint_url = stub.url("/c");
  b.max_retries = 2;
  b.retry_backoff = std::chrono::milliseconds(1);
  EXPECT_EQ(complete(b, "", "q").response, "ok");
  EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, PermanentFailureIsNotRetried) {
  std::atomic<int> calls{0};
  testing_support::StubServer stub([&](httplib::Server& s) {
    s.Post("/c", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 401;
    });
  });
  BackendSpec b;
  b.kind = BackendKind::Remote;
  b.endpoint_url = stub.url("/c");
  b.max_retries = 3;
  b.retry_backoff = std::chrono::milliseconds(1);
  EXPECT_EQ(code_of([&] { complete(b, "", "q"); }), ErrorCode::BackendUnavailable);
  EXPECT_EQ(calls.load(), 1);
}

TEST(Remote, EmptyContentAndMalformedBody) {
  testing_support::StubServer stub([](httplib::Server& s) {
    s.Post("/empty", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"message":{"content":""}}]})", "application/json");
    });
    s.Post("/junk", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
  });
  BackendSpec b;
  b.kind = BackendKind::Remote;
  b.endpoint_url = stub.url("/empty");
  EXPECT_EQ(code_of([&] { complete(b, "", "q"); }), ErrorCode::ResponseEmpty);
  b.endpoint_url = stub.url("/junk");
  EXPECT_EQ(code_of([&] { complete(b, "", "q"); }), ErrorCode::BackendUnavailable);
}

TEST(BackendSpec, Validation) {
  BackendSpec b;
  b.kind = BackendKind::Remote;
  EXPECT_EQ(code_of([&] { b.validate(); }), ErrorCode::InvalidConfig);
  b.endpoint_url = "http://127.0.0.1:1/x";
  EXPECT_NO_THROW(b.validate());
}
