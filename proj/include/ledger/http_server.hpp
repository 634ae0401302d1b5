#pragma once

// HTTP routes for the review service.

#include <charconv>
#include <string>
#include <string_view>

#include <httplib.h>

#include "ledger/service.hpp"

namespace ledger::service {

namespace http_detail {

inline void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline bool parse_size(const httplib::Request& req, const char* key, std::size_t fallback, std::size_t& out) {
  if (!req.has_param(key)) {
    out = fallback;
    return true;
  }
  const auto v = req.get_param_value(key);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return ec == std::errc() && ptr == v.data() + v.size();
}

}  // namespace http_detail

inline void mount(httplib::Server& server, State& state) {
  using httplib::Request;
  using httplib::Response;

  // Everything under /api except the health probe needs the bearer token.
  server.set_pre_routing_handler([&state](const Request& req, Response& res) {
    if (req.path.rfind("/api/", 0) != 0 || req.path == "/api/health") return httplib::Server::HandlerResponse::Unhandled;
    if (state.authorized(req.get_header_value("Authorization"))) return httplib::Server::HandlerResponse::Unhandled;
    http_detail::send(res, error_reply(401, "missing or invalid bearer token"));
    return httplib::Server::HandlerResponse::Handled;
  });

  server.Post("/api/score", [&state](const Request& req, Response& res) { http_detail::send(res, state.score(req.body)); });
  server.Get("/api/queue", [&state](const Request& req, Response& res) {
    std::size_t page = 0, size = 20;
    if (!http_detail::parse_size(req, "page", 0, page) || !http_detail::parse_size(req, "size", 20, size)) {
      http_detail::send(res, error_reply(400, "page and size must be non-negative integers"));
      return;
    }
    http_detail::send(res, state.queue_page(page, size));
  });
  server.Post("/api/verdict", [&state](const Request& req, Response& res) { http_detail::send(res, state.verdict(req.body)); });
  server.Get("/api/export/labels", [&state](const Request&, Response& res) { http_detail::send(res, state.export_labels()); });
  server.Get("/api/health", [&state](const Request&, Response& res) { http_detail::send(res, state.health()); });
  server.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    http_detail::send(res, error_reply(500, what));
  });
}

}  // namespace ledger::service
