#pragma once

// Routes the labeling service over HTTP.

#include <httplib.h>

#include "apiguard/service.hpp"

namespace apiguard {

inline void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline void mount_routes(httplib::Server& server, LabelService& service) {
  server.Get("/api/session", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.get_session()); });
  server.Get("/api/queries", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.get_queries()); });
  server.Get("/api/features", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.get_features()); });
  server.Post("/api/labels", [&](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> token;
    if (req.has_header("Idempotency-Key")) token = req.get_header_value("Idempotency-Key");
    reply(res, service.post_labels(req.body, token));
  });
  server.Post("/api/train", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.post_train()); });
  server.Post("/api/classify",
              [&](const httplib::Request& req, httplib::Response& res) { reply(res, service.post_classify(req.body)); });
  server.Get(R"(/api/reports/([A-Za-z0-9_-]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_report(req.matches[1]));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error_response(500, what));
  });
}

}  // namespace apiguard
