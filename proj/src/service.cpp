#include "lbps/service.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "lbps/error.hpp"
#include "lbps/io.hpp"

namespace lbps::service {

using nlohmann::json;

struct SessionService::Impl {
  session::SessionStore& store;
  httplib::Server server;

  explicit Impl(session::SessionStore& s) : store(s) {}
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const std::exception& ex) {
  int status = 500;
  std::string code = "internal";
  if (const auto* e = dynamic_cast<const Error*>(&ex)) {
    code = e->code();
    switch (e->kind()) {
      case ErrorKind::InvalidArgument:
      case ErrorKind::Validation: status = 400; break;
      case ErrorKind::NotFound: status = 404; break;
      case ErrorKind::Conflict: status = 409; break;
      default: status = 500;
    }
  } else if (dynamic_cast<const json::exception*>(&ex)) {
    status = 400;
    code = "malformed_request";
  }
  reply(res, status, {{"error", code}, {"message", ex.what()}});
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const std::exception& ex) {
      reply_error(res, ex);
    }
  };
}

json progress_json(const session::Session& s) {
  return {{"session_id", s.id}, {"cursor", s.cursor}, {"total", s.order.size()}, {"done", s.complete()}};
}

}  // namespace

SessionService::SessionService(session::SessionStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto& srv = impl_->server;
  auto& st = impl_->store;

  srv.Get("/v1/health", guarded([&st](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, {{"service", "lbps-session"}, {"version", kProtocolVersion}, {"plan_id", st.plan_id()},
                             {"plan_size", st.plan_size()}});
          }));

  srv.Post("/v1/sessions", guarded([&st](const httplib::Request& req, httplib::Response& res) {
             const json body = json::parse(req.body);
             const auto s = st.create_session(body.at("subject_id").get<std::string>(),
                                              body.value("seed", std::uint64_t{0}),
                                              body.value("plan_id", std::string{}));
             reply(res, 201, progress_json(s));
           }));

  srv.Get(R"(/v1/sessions/([A-Za-z0-9_-]+)/next)",
          guarded([&st](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto v = st.next_pair(id);
            if (!v) {
              const auto s = st.snapshot(id);
              reply(res, 200, {{"done", true}, {"index", s.cursor}, {"total", s.order.size()}});
              return;
            }
            const std::string base = "/v1/images/" + v->ref_id + "/";
            reply(res, 200,
                  {{"done", false},
                   {"index", v->index},
                   {"total", v->total},
                   {"ref_id", v->ref_id},
                   {"left", v->left_id},
                   {"right", v->right_id},
                   {"reference_url", base + v->ref_id},
                   {"left_url", base + v->left_id},
                   {"right_url", base + v->right_id}});
          }));

  srv.Post(R"(/v1/sessions/([A-Za-z0-9_-]+)/judgments)",
           guarded([&st](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const json body = json::parse(req.body);
             std::optional<std::size_t> index;
             if (body.contains("index")) index = body.at("index").get<std::size_t>();
             const std::size_t cursor =
                 st.record_judgment(id, body.at("ref_id").get<std::string>(), body.at("left").get<std::string>(),
                                    body.at("right").get<std::string>(), body.at("chosen").get<std::string>(), index);
             reply(res, 200, {{"ack", true}, {"seq", cursor - 1}, {"cursor", cursor}});
           }));

  srv.Get(R"(/v1/sessions/([A-Za-z0-9_-]+)/progress)",
          guarded([&st](const httplib::Request& req, httplib::Response& res) {
            reply(res, 200, progress_json(st.snapshot(req.matches[1])));
          }));

  srv.Get("/v1/export", guarded([&st](const httplib::Request&, httplib::Response& res) {
            const auto pcms = st.export_pcm();
            std::ostringstream out;
            out << "ref_id,i_id,j_id,p,w\n";
            for (std::size_t r = 0; r < pcms.size(); ++r) {
              const auto& ref = st.dataset().references[r];
              io::write_pcm_rows(out, ref.id, ref.images, pcms[r]);
            }
            res.status = 200;
            res.set_content(out.str(), "text/csv");
          }));

  srv.Get(R"(/v1/images/([A-Za-z0-9_.-]+)/([A-Za-z0-9_.-]+))",
          guarded([&st](const httplib::Request& req, httplib::Response& res) {
            const std::string ref = req.matches[1];
            const std::string image = req.matches[2];
            const auto dir = st.dataset().root / "images" / ref;
            for (const char* ext : {".png", ".jpg", ".jpeg", ".bmp", ".ppm"}) {
              const auto path = dir / (image + ext);
              std::ifstream in(path, std::ios::binary);
              if (!in) continue;
              std::stringstream ss;
              ss << in.rdbuf();
              const std::string type = std::string(ext) == ".png" ? "image/png"
                                       : std::string(ext) == ".bmp" ? "image/bmp"
                                       : std::string(ext) == ".ppm" ? "image/x-portable-pixmap"
                                                                    : "image/jpeg";
              res.status = 200;
              res.set_content(ss.str(), type);
              return;
            }
            throw NotFoundError("no image '" + image + "' for reference '" + ref + "'");
          }));
}

SessionService::~SessionService() = default;

int SessionService::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind", host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) throw IoError("cannot bind", host + ":" + std::to_string(port));
  return port;
}

void SessionService::listen() { impl_->server.listen_after_bind(); }

void SessionService::stop() { impl_->server.stop(); }

}  // namespace lbps::service
