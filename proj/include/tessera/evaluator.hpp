#pragma once
// Evaluator gateway: one interface over ranking / scoring / judging
// backends, with schema validation, bounded retries, call accounting and a
// persistent JSON cache. Deterministic mock backends make every pipeline
// runnable offline.

#include "tessera/graph.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

namespace tessera {

enum class RequestKind { rank_batch, score_states, judge_graph };

const char* to_string(RequestKind kind);

struct EvaluatorRequest {
    RequestKind kind;
    std::string prompt;      // rendered text, sent to HTTP backends and logged
    nlohmann::json payload;  // structured inputs; mock backends read these
};

// Thrown when a backend response violates the per-kind schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on transport-level failures that are worth retrying.
struct TransientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class EvaluatorBackend {
public:
    virtual ~EvaluatorBackend() = default;
    virtual std::string name() const = 0;
    virtual nlohmann::json complete(const EvaluatorRequest& request) = 0;
};

class CallLedger {
public:
    void record(RequestKind kind, std::uint64_t tokens = 0);
    std::uint64_t count(RequestKind kind) const;
    std::uint64_t total() const;
    std::uint64_t tokens() const { return tokens_.load(); }
    void reset();
    nlohmann::json to_json() const;

private:
    std::atomic<std::uint64_t> counts_[3] = {{0}, {0}, {0}};
    std::atomic<std::uint64_t> tokens_{0};
};

struct GatewayOptions {
    int max_retries = 1;       // retries after the first attempt
    int backoff_initial_ms = 250;
    bool backoff_enabled = true; // disabled in tests for speed
};

// Validates responses against the per-kind schema, retries (with exponential
// backoff on transient failures), and counts exactly one ledger entry per
// logical call. Safe for concurrent use.
class EvaluatorGateway {
public:
    EvaluatorGateway(std::shared_ptr<EvaluatorBackend> backend, GatewayOptions options = {});

    nlohmann::json call(const EvaluatorRequest& request);

    CallLedger& ledger() { return ledger_; }
    const CallLedger& ledger() const { return ledger_; }
    const std::string& backend_name() const { return backend_name_; }

    // Throws SchemaError naming the offending field if `body` does not match
    // the response schema for `kind`.
    static void validate_response(RequestKind kind, const nlohmann::json& body,
                                  const nlohmann::json& payload);

private:
    std::shared_ptr<EvaluatorBackend> backend_;
    GatewayOptions options_;
    CallLedger ledger_;
    std::string backend_name_;
};

// ---------------------------------------------------------------------------
// Persistent JSON cache (content-addressed files, atomic write-rename).
// ---------------------------------------------------------------------------

struct CacheKey {
    std::string substrate_hash;
    std::string state_fingerprint;
    std::string policy_version;

    std::string digest() const;
};

class JsonCacheStore {
public:
    explicit JsonCacheStore(std::filesystem::path dir);

    // Returns the stored payload on hit; otherwise runs `compute`, persists
    // its result, and returns it. A corrupt or mismatched entry is treated
    // as a miss (recomputed, with a warning on stderr).
    nlohmann::json get_or_compute(const CacheKey& key,
                                  const std::function<nlohmann::json()>& compute);

    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    const std::filesystem::path& dir() const { return dir_; }

    struct Stats {
        std::uint64_t files = 0;
        std::uint64_t bytes = 0;
    };
    static Stats stats(const std::filesystem::path& dir);
    static std::uint64_t clear(const std::filesystem::path& dir); // returns removed file count

private:
    std::filesystem::path dir_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::mutex io_mutex_;
};

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

struct BackendProfile {
    std::string base_url;     // e.g. http://localhost:8080
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_env;     // env var holding the bearer token (optional)
    int timeout_s = 60;
    int max_retries = 2;
};

// Chat-completion-style HTTP backend (see docs/wire.md for the exact field
// contract). The assistant message content must be the JSON response body.
class HttpBackend : public EvaluatorBackend {
public:
    explicit HttpBackend(BackendProfile profile);
    std::string name() const override { return "http:" + profile_.model; }
    nlohmann::json complete(const EvaluatorRequest& request) override;

private:
    BackendProfile profile_;
};

// Adapter for ad-hoc behaviours (used heavily in tests).
class FunctionBackend : public EvaluatorBackend {
public:
    using Fn = std::function<nlohmann::json(const EvaluatorRequest&)>;
    FunctionBackend(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
    std::string name() const override { return name_; }
    nlohmann::json complete(const EvaluatorRequest& request) override { return fn_(request); }

private:
    std::string name_;
    Fn fn_;
};

// Fixture replay: responses looked up by the digest of the request payload.
class TableBackend : public EvaluatorBackend {
public:
    explicit TableBackend(nlohmann::json table);
    static TableBackend from_file(const std::filesystem::path& file);
    static std::string request_digest(const EvaluatorRequest& request);

    std::string name() const override { return "mock:table"; }
    nlohmann::json complete(const EvaluatorRequest& request) override;

private:
    nlohmann::json table_;
};

// Deterministic graph-distance heuristic. Ranks actions by how close their
// target node is to the search target, scores states by
// clamp(rubric_max - dist(u, z)), and judges subgraphs with a
// permutation-invariant content hash. `salt` differentiates judge personas.
class ProximityBackend : public EvaluatorBackend {
public:
    ProximityBackend(const KnowledgeGraph& graph, std::string salt = "");
    std::string name() const override;
    nlohmann::json complete(const EvaluatorRequest& request) override;

    int distance_to_target(const std::string& from, const std::string& target);

private:
    const std::vector<int>& distances_to(const std::string& target);

    const KnowledgeGraph& graph_;
    std::string salt_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::vector<int>> distance_cache_; // target -> dist-to-target
};

// Emits one fixed label for every scoring/judging request and flat rankings.
class ConstantBackend : public EvaluatorBackend {
public:
    explicit ConstantBackend(int label) : label_(label) {}
    std::string name() const override { return "mock:constant"; }
    nlohmann::json complete(const EvaluatorRequest& request) override;

private:
    int label_;
};

// Schema fuzzing for error paths: produces `fail_count` malformed responses
// (cycling through missing-field / wrong-type / broken-permutation variants)
// before delegating to an inner backend.
class AdversarialBackend : public EvaluatorBackend {
public:
    AdversarialBackend(std::shared_ptr<EvaluatorBackend> inner, int fail_count);
    std::string name() const override { return "mock:adversarial"; }
    nlohmann::json complete(const EvaluatorRequest& request) override;

private:
    std::shared_ptr<EvaluatorBackend> inner_;
    int fail_count_;
    std::atomic<int> calls_{0};
};

// Parses "--backend" strings: mock:proximity[:salt], mock:constant[:label],
// mock:table:<file>, mock:adversarial[:n], http:<profile-name>. HTTP
// profiles are looked up in `profiles`.
std::shared_ptr<EvaluatorBackend> make_backend(const std::string& spec, const KnowledgeGraph& graph,
                                               const nlohmann::json& profiles = {});

} // namespace tessera
