#ifndef PILAR_SERVER_H_
#define PILAR_SERVER_H_

#include <filesystem>
#include <memory>
#include <string>

#include "pilar/service.h"

namespace httplib {
class Server;
}

namespace pilar {

// Binds ServiceCore::Handle to HTTP. Everything under /v1 goes to the core;
// an optional static directory is mounted at "/".
class HttpServer {
 public:
  HttpServer(ServiceCore& core, const std::filesystem::path& static_dir = {});
  ~HttpServer();

  // Returns the bound port, or -1.
  int Bind(const std::string& host, int port);
  // Blocks until Stop().
  bool Serve();
  void Stop();
  bool running() const;

 private:
  ServiceCore& core_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace pilar

#endif  // PILAR_SERVER_H_
