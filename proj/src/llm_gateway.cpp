#include "idas/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "idas/error.hpp"
#include "idas/http.hpp"
#include "idas/text.hpp"

namespace idas {

namespace fs = std::filesystem;

namespace {

bool is_slot_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool is_slot_char(char c) { return is_slot_start(c) || (c >= '0' && c <= '9'); }

// Length of the slot name at body[pos] == '{', or 0 if this brace is literal.
std::size_t slot_name_length(std::string_view body, std::size_t pos) {
  std::size_t i = pos + 1;
  if (i >= body.size() || !is_slot_start(body[i])) return 0;
  while (i < body.size() && is_slot_char(body[i])) ++i;
  if (i >= body.size() || body[i] != '}') return 0;
  return i - pos - 1;
}

std::string scripted_response(const Script& script, std::string_view user) {
  const std::string subject(user);
  for (const auto& rule : script.rules) {
    if (rule.kind == MatchKind::Substring) {
      if (subject.find(rule.matcher) != std::string::npos) return rule.response;
      continue;
    }
    std::regex re;
    try {
      re = std::regex(rule.matcher, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::InvalidConfig, "bad script pattern '" + rule.matcher + "': " + e.what());
    }
    std::smatch match;
    if (std::regex_search(subject, match, re)) return match.format(rule.response);
  }
  switch (script.fallback) {
    case FallbackMode::Echo: return subject;
    case FallbackMode::EchoContext: return extract_context(user);
    case FallbackMode::Fixed: return script.fixed_text;
    case FallbackMode::None: break;
  }
  throw Error(ErrorCode::NoRuleMatched, "no script rule matched and no fallback is set");
}

std::string remote_response(const BackendSpec& backend, std::string_view system,
                            std::string_view user, const CompletionParams& params) {
  nlohmann::json messages = nlohmann::json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  const nlohmann::json request = {{"model", backend.model_name},
                                  {"messages", messages},
                                  {"temperature", params.temperature},
                                  {"max_tokens", params.max_tokens}};
  std::map<std::string, std::string> headers;
  if (!backend.api_key_env.empty()) {
    if (const char* key = std::getenv(backend.api_key_env.c_str())) {
      headers["Authorization"] = std::string("Bearer ") + key;
    }
  }
  const auto body = request.dump();
  const auto response = http::with_retries(backend.max_retries, backend.retry_backoff, [&] {
    return http::post_json(backend.endpoint_url, body, headers, backend.timeout);
  });
  if (response.status != 200) {
    throw Error(ErrorCode::BackendUnavailable,
                "chat endpoint returned " + std::to_string(response.status) + ": " +
                    response.body.substr(0, 200));
  }
  try {
    const auto doc = nlohmann::json::parse(response.body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("malformed chat response: ") + e.what());
  }
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string name, std::string body) {
  PromptTemplate t{std::move(name), std::move(body), {}};
  for (std::size_t pos = t.body.find('{'); pos != std::string::npos; pos = t.body.find('{', pos + 1)) {
    if (const auto len = slot_name_length(t.body, pos)) t.required_slots.insert(t.body.substr(pos + 1, len));
  }
  return t;
}

std::string render(const PromptTemplate& tmpl, const SlotValues& slots) {
  for (const auto& [name, value] : slots) {
    if (!tmpl.required_slots.contains(name)) {
      throw Error(ErrorCode::UnknownSlot, "template '" + tmpl.name + "' has no slot {" + name + "}");
    }
  }
  for (const auto& name : tmpl.required_slots) {
    if (!slots.contains(name)) {
      throw Error(ErrorCode::MissingSlot, "template '" + tmpl.name + "' needs slot {" + name + "}");
    }
  }

  std::string out;
  out.reserve(tmpl.body.size());
  std::string_view body = tmpl.body;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto brace = body.find('{', pos);
    if (brace == std::string_view::npos) {
      out += body.substr(pos);
      break;
    }
    out += body.substr(pos, brace - pos);
    const auto len = slot_name_length(body, brace);
    if (len == 0) {
      out += '{';
      pos = brace + 1;
      continue;
    }
    out += slots.at(std::string(body.substr(brace + 1, len)));
    pos = brace + len + 2;
  }
  return out;
}

TemplateStore TemplateStore::load_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::InvalidConfig, "template directory not found: " + dir.string());
  }
  TemplateStore store;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    store.add(PromptTemplate::parse(entry.path().stem().string(), std::move(buf).str()));
  }
  return store;
}

void TemplateStore::add(PromptTemplate tmpl) {
  auto name = tmpl.name;
  templates_.insert_or_assign(std::move(name), std::move(tmpl));
}

bool TemplateStore::contains(std::string_view name) const {
  return templates_.find(name) != templates_.end();
}

const PromptTemplate& TemplateStore::get(std::string_view name) const {
  auto found = templates_.find(name);
  if (found == templates_.end()) {
    throw Error(ErrorCode::UnknownTemplate, "no template named '" + std::string(name) + "'");
  }
  return found->second;
}

std::vector<std::string> TemplateStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

std::string extract_context(std::string_view prompt) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = prompt.find(kContextOpen, pos);
    if (open == std::string_view::npos) break;
    const auto begin = open + kContextOpen.size();
    const auto close = prompt.find(kContextClose, begin);
    const auto end = close == std::string_view::npos ? prompt.size() : close;
    const auto region = text::trim(prompt.substr(begin, end - begin));
    if (!region.empty()) {
      if (!out.empty()) out += "\n\n";
      out += region;
    }
    if (close == std::string_view::npos) break;
    pos = close + kContextClose.size();
  }
  return out;
}

std::string_view to_string(BackendKind kind) noexcept {
  return kind == BackendKind::Remote ? "remote" : "scripted";
}

Script parse_script(const nlohmann::json& j) {
  Script script;
  try {
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
      ScriptRule rule;
      if (r.contains("contains")) {
        rule.kind = MatchKind::Substring;
        rule.matcher = r.at("contains").get<std::string>();
      } else if (r.contains("pattern")) {
        rule.kind = MatchKind::Pattern;
        rule.matcher = r.at("pattern").get<std::string>();
        try {
          std::regex probe(rule.matcher, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          throw Error(ErrorCode::InvalidConfig, "bad script pattern '" + rule.matcher + "': " + e.what());
        }
      } else {
        throw Error(ErrorCode::InvalidConfig, "script rule needs 'contains' or 'pattern'");
      }
      rule.response = r.at("response").get<std::string>();
      script.rules.push_back(std::move(rule));
    }
    const auto fallback = j.value("fallback", nlohmann::json("none"));
    if (fallback.is_object()) {
      script.fallback = FallbackMode::Fixed;
      script.fixed_text = fallback.at("fixed").get<std::string>();
    } else {
      const auto mode = fallback.get<std::string>();
      if (mode == "none") script.fallback = FallbackMode::None;
      else if (mode == "echo") script.fallback = FallbackMode::Echo;
      else if (mode == "echo_context") script.fallback = FallbackMode::EchoContext;
      else throw Error(ErrorCode::InvalidConfig, "unknown script fallback '" + mode + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed script: ") + e.what());
  }
  return script;
}

Script load_script(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open script " + path.string());
  try {
    return parse_script(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "script " + path.string() + ": " + e.what());
  }
}

void BackendSpec::validate() const {
  if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (kind == BackendKind::Remote) {
    if (endpoint_url.empty()) throw Error(ErrorCode::InvalidConfig, "remote backend needs endpoint_url");
    http::parse_url(endpoint_url);
  }
}

ChatExchange complete(const BackendSpec& backend, std::string_view system, std::string_view user,
                      const CompletionParams& params) {
  if (text::trim(user).empty()) throw Error(ErrorCode::InvalidArgument, "empty user message");
  const auto started = std::chrono::steady_clock::now();
  ChatExchange exchange{std::string(system), std::string(user), {}, {}, backend.kind};
  exchange.response = backend.kind == BackendKind::Scripted
                          ? scripted_response(backend.script, user)
                          : remote_response(backend, system, user, params);
  exchange.latency = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::steady_clock::now() - started);
  if (text::trim(exchange.response).empty()) {
    throw Error(ErrorCode::ResponseEmpty, std::string(to_string(backend.kind)) + " backend returned an empty response");
  }
  return exchange;
}

}  // namespace idas
