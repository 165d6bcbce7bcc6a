#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace idas {

/// A prompt with `{slot_name}` markers. Slot names match [A-Za-z_][A-Za-z0-9_]*;
/// any other brace text is literal.
struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<std::string> required_slots;

  /// Builds a template whose required slots are exactly the markers in body.
  static PromptTemplate parse(std::string name, std::string body);
};

using SlotValues = std::map<std::string, std::string>;

/// Single-pass literal substitution. Throws MissingSlot for an absent
/// required slot and UnknownSlot for a supplied name the template lacks.
std::string render(const PromptTemplate& tmpl, const SlotValues& slots);

/// Templates keyed by file stem; one `<name>.txt` file per template.
class TemplateStore {
 public:
  static TemplateStore load_dir(const std::filesystem::path& dir);

  void add(PromptTemplate tmpl);
  bool contains(std::string_view name) const;
  /// Throws Error(UnknownTemplate).
  const PromptTemplate& get(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Templates wrap retrieved or source text in these markers so that a scripted
// EchoContext backend can hand it back verbatim.
inline constexpr std::string_view kContextOpen = "<<<CONTEXT";
inline constexpr std::string_view kContextClose = "CONTEXT>>>";

/// Trimmed contents of every context region, joined by a blank line.
std::string extract_context(std::string_view prompt);

enum class BackendKind { Remote, Scripted };
std::string_view to_string(BackendKind kind) noexcept;

enum class MatchKind { Substring, Pattern };

struct ScriptRule {
  MatchKind kind = MatchKind::Substring;
  std::string matcher;
  /// For Pattern rules `$1`..`$9` and `$&` expand to the match groups.
  std::string response;
};

enum class FallbackMode { None, Echo, EchoContext, Fixed };

struct Script {
  std::vector<ScriptRule> rules;
  FallbackMode fallback = FallbackMode::None;
  std::string fixed_text;
};

/// {"rules": [{"contains"|"pattern": "...", "response": "..."}...],
///  "fallback": "none"|"echo"|"echo_context"|{"fixed": "..."}}
Script parse_script(const nlohmann::json& j);
Script load_script(const std::filesystem::path& path);

struct BackendSpec {
  BackendKind kind = BackendKind::Scripted;
  // Remote
  std::string endpoint_url;  // full chat-completions URL
  std::string model_name;
  std::string api_key_env;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{250};
  // Scripted
  Script script;

  void validate() const;
};

struct CompletionParams {
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct ChatExchange {
  std::string system;
  std::string user;
  std::string response;
  std::chrono::microseconds latency{0};
  BackendKind backend = BackendKind::Scripted;
};

/// One chat completion. Errors: BackendUnavailable (transport or HTTP failure
/// after retries), NoRuleMatched (script without a matching rule or
/// fallback), ResponseEmpty.
ChatExchange complete(const BackendSpec& backend, std::string_view system, std::string_view user,
                      const CompletionParams& params = {});

}  // namespace idas
