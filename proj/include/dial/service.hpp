#pragma once

#include <chrono>
#include <memory>
#include <string>

namespace dial {

// HTTP/JSON service under /v1. Every session lives in its own directory below
// `root` and is saved on each state transition; sessions found there at start
// are reloaded.
class Service {
public:
  explicit Service(std::string root);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket; port 0 picks a free one. Returns the port or -1.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listen() on a background thread
  void stop();

  // Waits until the session is no longer training or blocking.
  bool wait_settled(const std::string& id, std::chrono::milliseconds timeout);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dial
