#include <httplib.h>

#include <json.hpp>

#include "emotod/generation.hpp"

namespace emotod {

using nlohmann::json;

WireBackend::WireBackend(WireBackendOptions options) : options_(std::move(options)) {}

bool WireBackend::supports(Capability capability) const {
  switch (capability) {
    case Capability::no_repeat_ngram:
      return options_.supports_no_repeat_ngram;
    case Capability::stop_sequences:
    case Capability::sampling:
      return true;
  }
  return false;
}

std::string WireBackend::identity() const {
  return "wire:" + options_.base_url + options_.path + "#" + options_.model;
}

std::string WireBackend::request_body(std::string_view prompt, const GenParams& params) const {
  json body = {{"model", options_.model},
               {"prompt", std::string(prompt)},
               {"max_tokens", params.max_new_tokens},
               {"temperature", params.mode == DecodeMode::greedy ? 0.0 : params.temperature},
               {"stop", params.stop_sequences}};
  if (params.no_repeat_ngram && options_.supports_no_repeat_ngram) {
    body["no_repeat_ngram_size"] = *params.no_repeat_ngram;
  }
  return body.dump();
}

std::string WireBackend::complete(std::string_view prompt, const GenParams& params) {
  httplib::Client client(options_.base_url);
  const auto secs = static_cast<time_t>(options_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);

  auto res = client.Post(options_.path, request_body(prompt, params), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = identity() + ": " + httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw BackendTimeout(what);
    }
    throw BackendUnavailable(what);
  }
  if (res->status == 429 || res->status >= 500) {
    throw BackendUnavailable(identity() + ": HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw BackendRejected(identity() + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  try {
    const json doc = json::parse(res->body);
    return doc.at("choices").at(0).at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendRejected(identity() + ": malformed completion response: " + e.what());
  }
}

}  // namespace emotod
