#pragma once

#include "qcart/episode.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qcart {

inline constexpr int kProtocolVersion = 1;
// Longer input lines are rejected as malformed.
inline constexpr std::size_t kMaxLineBytes = 1 << 16;

enum class AgentMode { kController, kEstimator };
enum class ObsSource { kRaw, kEstimate, kBoth };

std::string_view to_string(AgentMode v);
std::string_view to_string(ObsSource v);
AgentMode parse_agent_mode(std::string_view s);
ObsSource parse_obs_source(std::string_view s);

struct SessionConfig {
  EnvConfig env;  // the agent-facing binding slot is filled in by the session
  AgentMode mode = AgentMode::kController;
  ObsSource obs_source = ObsSource::kRaw;
  std::uint64_t master_seed = 0;

  /// Effective environment config for this mode. Controller mode requires a
  /// non-agent estimator; estimator mode requires a non-agent controller.
  EnvConfig episode_config() const;
  void validate() const;
};

/// One protocol session: consumes request lines, produces reply lines. The
/// session closes after an `error` reply.
///
/// Requests:  hello {mode?, seed?}, reset {seed?}, act {action: [..]}
/// Replies:   hello, obs, reward, done, error
class Session {
 public:
  explicit Session(SessionConfig config);
  ~Session();

  std::vector<std::string> handle(std::string_view line);
  bool closed() const { return closed_; }
  bool in_episode() const { return env_.has_value() && !env_->done(); }
  std::uint64_t episodes_started() const { return episodes_; }
  /// Episodes left unfinished when the session closed.
  std::uint64_t aborted() const { return aborted_; }
  /// Marks a running episode aborted (transport loss).
  void close();

 private:
  std::vector<std::string> on_hello(const nlohmann::json& msg);
  std::vector<std::string> on_reset(const nlohmann::json& msg);
  std::vector<std::string> on_act(const nlohmann::json& msg);
  std::string error(std::string_view message);
  std::string observation() const;
  void start_episode(std::uint64_t seed);

  SessionConfig config_;
  EnvConfig episode_config_;
  bool greeted_ = false;
  bool closed_ = false;
  std::uint64_t episodes_ = 0;
  std::uint64_t aborted_ = 0;
  std::optional<Environment> env_;
  std::optional<Controller> controller_;
  Vec2 agent_estimate_ = Vec2::Zero();
  Vec2 previous_estimate_ = Vec2::Zero();
};

/// Serves one session over a pair of streams until end-of-stream or close.
/// Returns the number of aborted episodes.
std::uint64_t serve_stream(const SessionConfig& config, std::istream& in,
                           std::ostream& out);

/// Listens on 127.0.0.1:port and serves each connection as an independent
/// session on its own thread. `max_connections` > 0 stops after that many
/// connections have been served. Throws RuntimeFault on socket errors.
void serve_tcp(const SessionConfig& config, int port, int max_connections = 0);

}  // namespace qcart
