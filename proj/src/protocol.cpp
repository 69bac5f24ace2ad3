#include "qcart/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <iostream>
#include <istream>
#include <ostream>
#include <thread>

namespace qcart {

using nlohmann::json;

std::string_view to_string(AgentMode v) {
  return v == AgentMode::kController ? "controller" : "estimator";
}

std::string_view to_string(ObsSource v) {
  switch (v) {
    case ObsSource::kRaw: return "raw";
    case ObsSource::kEstimate: return "estimate";
    case ObsSource::kBoth: return "both";
  }
  return "?";
}

AgentMode parse_agent_mode(std::string_view s) {
  if (s == "controller") return AgentMode::kController;
  if (s == "estimator") return AgentMode::kEstimator;
  throw ConfigError("unknown agent mode '" + std::string(s) + "'");
}

ObsSource parse_obs_source(std::string_view s) {
  if (s == "raw") return ObsSource::kRaw;
  if (s == "estimate") return ObsSource::kEstimate;
  if (s == "both") return ObsSource::kBoth;
  throw ConfigError("unknown obs_source '" + std::string(s) + "'");
}

EnvConfig SessionConfig::episode_config() const {
  EnvConfig c = env;
  if (mode == AgentMode::kController) {
    c.binding.controller = ControllerKind::kAgent;
    if (c.binding.estimator == EstimatorKind::kAgent) {
      throw ConfigError("controller mode cannot also delegate the estimator");
    }
  } else {
    c.binding.estimator = EstimatorKind::kAgent;
    if (c.binding.controller == ControllerKind::kAgent) {
      throw ConfigError("estimator mode needs an in-process controller");
    }
  }
  return c;
}

void SessionConfig::validate() const {
  const EnvConfig c = episode_config();
  c.validate();
  const bool has_filter = c.binding.estimator == EstimatorKind::kKalman ||
                          c.binding.estimator == EstimatorKind::kKalmanDecorrelated ||
                          c.binding.estimator == EstimatorKind::kEkf;
  if (mode == AgentMode::kController && obs_source != ObsSource::kRaw &&
      !has_filter) {
    throw ConfigError("obs_source '" + std::string(to_string(obs_source)) +
                      "' requires an in-process estimator");
  }
}

namespace {

std::string dump(const json& j) { return j.dump(); }

json message(std::string_view kind) {
  return json{{"v", kProtocolVersion}, {"kind", kind}};
}

std::vector<double> read_action(const json& msg, std::size_t dim) {
  if (!msg.contains("action") || !msg["action"].is_array()) {
    throw ConfigError("act needs an 'action' array");
  }
  const json& a = msg["action"];
  if (a.size() != dim) {
    throw ConfigError("action must have " + std::to_string(dim) + " entries");
  }
  std::vector<double> out;
  for (const json& v : a) {
    if (!v.is_number()) throw ConfigError("action entries must be numbers");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("action entries must be finite");
    out.push_back(d);
  }
  return out;
}

std::optional<std::uint64_t> read_seed(const json& msg) {
  if (!msg.contains("seed")) return std::nullopt;
  const json& s = msg["seed"];
  if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
    throw ConfigError("seed must be a non-negative integer");
  }
  return s.get<std::uint64_t>();
}

}  // namespace

Session::Session(SessionConfig config) : config_(std::move(config)) {
  config_.validate();
  episode_config_ = config_.episode_config();
}

Session::~Session() = default;

void Session::close() {
  if (in_episode()) ++aborted_;
  env_.reset();
  closed_ = true;
}

std::string Session::error(std::string_view text) {
  close();
  json j = message("error");
  j["message"] = text;
  return dump(j);
}

std::vector<std::string> Session::handle(std::string_view line) {
  if (closed_) return {};
  if (line.size() > kMaxLineBytes) return {error("line too long")};
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception&) {
    return {error("malformed JSON")};
  }
  try {
    if (!msg.is_object()) return {error("message must be a JSON object")};
    if (msg.contains("v") &&
        (!msg["v"].is_number_integer() || msg["v"].get<std::int64_t>() != kProtocolVersion)) {
      return {error("unsupported protocol version")};
    }
    if (!msg.contains("kind") || !msg["kind"].is_string()) {
      return {error("missing 'kind'")};
    }
    const std::string kind = msg["kind"].get<std::string>();
    if (kind == "hello") return on_hello(msg);
    if (!greeted_) return {error("expected hello")};
    if (kind == "reset") return on_reset(msg);
    if (kind == "act") return on_act(msg);
    return {error("unknown kind '" + kind + "'")};
  } catch (const ConfigError& e) {
    return {error(e.what())};
  } catch (const json::exception& e) {
    return {error(e.what())};
  } catch (const RuntimeFault& e) {
    return {error(std::string("runtime fault: ") + e.what())};
  }
}

std::vector<std::string> Session::on_hello(const json& msg) {
  if (greeted_) return {error("duplicate hello")};
  if (msg.contains("mode")) {
    if (!msg["mode"].is_string() ||
        parse_agent_mode(msg["mode"].get<std::string>()) != config_.mode) {
      return {error("server is configured for mode '" +
                    std::string(to_string(config_.mode)) + "'")};
    }
  }
  if (auto seed = read_seed(msg)) config_.master_seed = *seed;
  greeted_ = true;
  const bool controller = config_.mode == AgentMode::kController;
  std::size_t obs_dim = 5;
  if (controller) obs_dim = config_.obs_source == ObsSource::kBoth ? 4 : 2;
  json j = message("hello");
  j["mode"] = to_string(config_.mode);
  j["obs_source"] = to_string(config_.obs_source);
  j["system"] = to_string(episode_config_.system);
  j["potential"] = to_string(episode_config_.potential.kind);
  j["n_meas"] = episode_config_.binding.n_meas;
  j["max_steps"] = episode_config_.binding.max_steps;
  j["f_max"] = episode_config_.params.f_max;
  j["obs_dim"] = obs_dim;
  j["act_dim"] = controller ? 1 : 2;
  j["seed"] = config_.master_seed;
  return {dump(j)};
}

void Session::start_episode(std::uint64_t seed) {
  env_.emplace(episode_config_, seed);
  controller_.reset();
  if (config_.mode == AgentMode::kEstimator) {
    controller_.emplace(episode_config_, seed);
  }
  agent_estimate_ = Vec2::Zero();
  previous_estimate_ = Vec2::Zero();
  ++episodes_;
  env_->reset();
}

std::string Session::observation() const {
  const Vec2& y = env_->last_block().y_mean;
  std::vector<double> obs;
  if (config_.mode == AgentMode::kController) {
    if (config_.obs_source != ObsSource::kEstimate) {
      obs.push_back(y(0));
      obs.push_back(y(1));
    }
    if (config_.obs_source != ObsSource::kRaw) {
      obs.push_back(env_->estimate().mean(0));
      obs.push_back(env_->estimate().mean(1));
    }
  } else {
    obs = {agent_estimate_(0), agent_estimate_(1), y(0), y(1),
           env_->last_force()};
  }
  json j = message("obs");
  j["obs"] = obs;
  j["t"] = env_->t();
  return dump(j);
}

std::vector<std::string> Session::on_reset(const json& msg) {
  if (in_episode()) ++aborted_;
  const std::uint64_t seed =
      read_seed(msg).value_or(mix_seed(config_.master_seed, episodes_));
  try {
    start_episode(seed);
  } catch (const RuntimeFault& e) {
    env_.reset();
    return {error(std::string("runtime fault: ") + e.what())};
  }
  if (env_->done()) {
    json d = message("done");
    d["terminated_by"] = to_string(env_->last_block().terminated_by);
    d["t_termination"] = env_->t();
    return {dump(d)};
  }
  return {observation()};
}

std::vector<std::string> Session::on_act(const json& msg) {
  if (!in_episode()) return {error("act without a running episode")};
  json reward = message("reward");
  double force = 0.0;
  double r = 0.0;
  if (config_.mode == AgentMode::kController) {
    const double requested = read_action(msg, 1)[0];
    const double f_max = episode_config_.params.f_max;
    force = std::clamp(requested, -f_max, f_max);
    reward["clamped"] = force != requested;
    reward["applied"] = std::vector<double>{force};
  } else {
    const std::vector<double> a = read_action(msg, 2);
    agent_estimate_ += Vec2(a[0], a[1]);
    reward["clamped"] = false;
    reward["applied"] = a;
    force = controller_->decide(agent_estimate_);
  }
  if (config_.mode == AgentMode::kEstimator) {
    env_->note_estimate(agent_estimate_);
  } else {
    env_->note_estimate(env_->has_estimator() ? env_->estimate().mean
                                              : env_->last_block().y_mean);
  }
  try {
    env_->advance(force);
  } catch (const RuntimeFault& e) {
    return {error(std::string("runtime fault: ") + e.what())};
  }
  const BlockResult& b = env_->last_block();
  if (config_.mode == AgentMode::kController) {
    r = b.done && b.terminated_by == TerminatedBy::kThreshold ? -1.0 : 0.0;
  } else if (!b.done) {
    r = -env_->prediction_error(agent_estimate_, force).squaredNorm();
  }
  reward["reward"] = r;
  std::vector<std::string> out{dump(reward)};
  if (b.done) {
    json d = message("done");
    d["terminated_by"] = to_string(b.terminated_by);
    d["t_termination"] = env_->t();
    out.push_back(dump(d));
  } else {
    out.push_back(observation());
  }
  return out;
}

std::uint64_t serve_stream(const SessionConfig& config, std::istream& in,
                           std::ostream& out) {
  Session session(config);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    for (const std::string& reply : session.handle(line)) {
      out << reply << '\n';
    }
    out.flush();
  }
  session.close();
  return session.aborted();
}

namespace {

// Reads newline-terminated lines from a socket.
class SocketLines {
 public:
  explicit SocketLines(int fd) : fd_(fd) {}

  bool next(std::string& line) {
    for (;;) {
      const auto pos = buffer_.find('\n');
      if (pos != std::string::npos) {
        line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return true;
      }
      if (buffer_.size() > kMaxLineBytes) {
        line = std::move(buffer_);
        buffer_.clear();
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n =
        ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(SessionConfig config, int fd) {
  Session session(std::move(config));
  SocketLines lines(fd);
  std::string line;
  bool ok = true;
  while (ok && !session.closed() && lines.next(line)) {
    if (line.empty() || line == "\r") continue;
    for (const std::string& reply : session.handle(line)) {
      ok = ok && send_all(fd, reply + "\n");
    }
  }
  session.close();
  if (session.aborted() > 0) {
    std::cerr << "qcart: session lost with " << session.aborted()
              << " unfinished episode(s)\n";
  }
  ::close(fd);
}

}  // namespace

void serve_tcp(const SessionConfig& config, int port, int max_connections) {
  config.validate();
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw RuntimeFault(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listener, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listener);
    throw RuntimeFault("cannot listen on port " + std::to_string(port) + ": " + why);
  }
  std::vector<std::thread> workers;
  for (std::uint64_t index = 0;
       max_connections <= 0 || index < static_cast<std::uint64_t>(max_connections);
       ++index) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    SessionConfig c = config;
    c.master_seed = mix_seed(config.master_seed, index);
    workers.emplace_back(serve_connection, std::move(c), fd);
  }
  ::close(listener);
  for (auto& w : workers) w.join();
}

}  // namespace qcart
