#pragma once

#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "adhoc/annotate/store.hpp"
#include "adhoc/prelabel/bm25.hpp"

namespace httplib {
class Server;
}

namespace adhoc {

struct ServiceOptions {
  // Expose BM25 pre-labels to annotators. Hidden by default.
  bool show_prelabels = false;
  std::map<std::string, TopicId> prelabels;  // sentence id -> pre-label
  std::map<int, GoldStandard> gold;          // per phase
  // Minimum gold-labelled sentences for a topic to enter phase >= 2 metrics.
  std::size_t min_topic_coverage = 3;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent handlers behind the annotation HTTP API. Endpoint
// shapes are documented in docs/api.md.
class AnnotationService {
public:
  AnnotationService(AnnotationStore& store, const Taxonomy& taxonomy, ServiceOptions options);

  ApiResponse next(const std::string& token, const std::string& annotator_id) const;
  ApiResponse submit(const std::string& token, const nlohmann::json& body);
  ApiResponse progress(const std::string& token, const std::string& annotator_id) const;
  ApiResponse agreement(int phase, const std::string& level) const;
  ApiResponse taxonomy() const;

  const AnnotationStore& store() const noexcept { return store_; }

private:
  const Annotator& authenticate(const std::string& token, const std::string& annotator_id) const;

  AnnotationStore& store_;
  const Taxonomy& taxonomy_;
  ServiceOptions options_;
};

// Maps the service onto HTTP routes. The caller owns listening.
std::unique_ptr<httplib::Server> make_http_server(AnnotationService& service);

}  // namespace adhoc
