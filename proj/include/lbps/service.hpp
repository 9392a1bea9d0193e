#ifndef LBPS_SERVICE_HPP
#define LBPS_SERVICE_HPP

// HTTP/JSON front end of the session store. Endpoints (all under /v1):
//
//   GET  /v1/health                      {"service":"lbps-session","version":1,"plan_id":..}
//   POST /v1/sessions                    {"subject_id":s,"seed":n[,"plan_id":p]} -> 201 session
//   GET  /v1/sessions/{id}/next          current pair or {"done":true}
//   POST /v1/sessions/{id}/judgments     {"ref_id","left","right","chosen"[,"index"]} -> ack
//   GET  /v1/sessions/{id}/progress      {"cursor","total","done"}
//   GET  /v1/export                      PCM fragment CSV (ref_id,i_id,j_id,p,w)
//   GET  /v1/images/{ref}/{image}        image bytes from <dataset>/images/{ref}/{image}.*
//
// Errors: 400 validation, 404 unknown session/plan/image, 409 conflict,
// 500 I/O; body {"error":code,"message":text}.

#include <functional>
#include <memory>
#include <string>

#include "lbps/session.hpp"

namespace lbps::service {

inline constexpr int kProtocolVersion = 1;

class SessionService {
public:
  explicit SessionService(session::SessionStore& store);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Binds to host:port (port 0 = any free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lbps::service

#endif  // LBPS_SERVICE_HPP
