#include "pilar/server.h"

#include "httplib.h"

namespace pilar {

HttpServer::HttpServer(ServiceCore& core, const std::filesystem::path& static_dir)
    : core_(core), server_(std::make_unique<httplib::Server>()) {
  auto handle = [this](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = core_.Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Get("/v1/.*", handle);
  server_->Post("/v1/.*", handle);
  server_->Put("/v1/.*", handle);
  server_->Options("/v1/.*", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server_->set_tcp_nodelay(true);
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
  if (!static_dir.empty()) server_->set_mount_point("/", static_dir.string());
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::Serve() { return server_->listen_after_bind(); }

void HttpServer::Stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace pilar
