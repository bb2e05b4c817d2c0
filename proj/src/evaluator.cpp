#include "tessera/evaluator.hpp"

#include "tessera/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <iostream>
#include <limits>
#include <set>
#include <thread>

#include <httplib.h>

namespace tessera {

using nlohmann::json;

const char* to_string(RequestKind kind) {
    switch (kind) {
        case RequestKind::rank_batch: return "rank_batch";
        case RequestKind::score_states: return "score_states";
        case RequestKind::judge_graph: return "judge_graph";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// CallLedger
// ---------------------------------------------------------------------------

void CallLedger::record(RequestKind kind, std::uint64_t tokens) {
    counts_[static_cast<int>(kind)].fetch_add(1, std::memory_order_relaxed);
    if (tokens > 0) tokens_.fetch_add(tokens, std::memory_order_relaxed);
}

std::uint64_t CallLedger::count(RequestKind kind) const {
    return counts_[static_cast<int>(kind)].load(std::memory_order_relaxed);
}

std::uint64_t CallLedger::total() const {
    return count(RequestKind::rank_batch) + count(RequestKind::score_states) +
           count(RequestKind::judge_graph);
}

void CallLedger::reset() {
    for (auto& c : counts_) c.store(0);
    tokens_.store(0);
}

json CallLedger::to_json() const {
    return json{{"rank_batch", count(RequestKind::rank_batch)},
                {"score_states", count(RequestKind::score_states)},
                {"judge_graph", count(RequestKind::judge_graph)},
                {"total", total()},
                {"tokens", tokens()}};
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

EvaluatorGateway::EvaluatorGateway(std::shared_ptr<EvaluatorBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (!backend_) throw std::invalid_argument("gateway: backend must not be null");
    backend_name_ = backend_->name();
}

namespace {

// `requested` holds the index values named in the request payload; response
// entries must reference them uniquely (and exhaustively when required).
void require_unique_indices(const json& entries, const char* entry_field,
                            const std::set<long>& requested, bool require_full_coverage) {
    std::set<long> seen;
    for (const auto& entry : entries) {
        if (!entry.is_object() || !entry.contains(entry_field) ||
            !entry.at(entry_field).is_number_integer())
            throw SchemaError(std::string("missing or non-integer field '") + entry_field + "'");
        long index = entry.at(entry_field).get<long>();
        if (requested.count(index) == 0)
            throw SchemaError("index not in the request: " + std::to_string(index));
        if (!seen.insert(index).second)
            throw SchemaError("duplicate index: " + std::to_string(index));
    }
    if (require_full_coverage && seen.size() != requested.size())
        throw SchemaError("response covers " + std::to_string(seen.size()) + " of " +
                          std::to_string(requested.size()) + " requested items");
}

std::set<long> requested_indices(const json& items) {
    std::set<long> indices;
    for (const auto& item : items) indices.insert(item.at("index").get<long>());
    return indices;
}

void require_logprob_map(const json& entry) {
    if (!entry.contains("label_logprobs") || !entry.at("label_logprobs").is_object())
        throw SchemaError("missing field 'label_logprobs'");
    for (const auto& [label, lp] : entry.at("label_logprobs").items()) {
        (void)label;
        if (!lp.is_number()) throw SchemaError("non-numeric log-probability in 'label_logprobs'");
    }
}

} // namespace

void EvaluatorGateway::validate_response(RequestKind kind, const json& body, const json& payload) {
    if (!body.is_object()) throw SchemaError("response body is not a JSON object");
    switch (kind) {
        case RequestKind::rank_batch: {
            if (!body.contains("rankings") || !body.at("rankings").is_array())
                throw SchemaError("missing field 'rankings'");
            require_unique_indices(body.at("rankings"), "index",
                                   requested_indices(payload.at("actions")), true);
            for (const auto& entry : body.at("rankings")) {
                if (!entry.contains("rank") || !entry.at("rank").is_number_integer())
                    throw SchemaError("missing field 'rank'");
                if (!entry.contains("score") || !entry.at("score").is_number())
                    throw SchemaError("missing field 'score'");
            }
            break;
        }
        case RequestKind::score_states: {
            if (!body.contains("scores") || !body.at("scores").is_array())
                throw SchemaError("missing field 'scores'");
            require_unique_indices(body.at("scores"), "index",
                                   requested_indices(payload.at("states")), false);
            for (const auto& entry : body.at("scores")) require_logprob_map(entry);
            break;
        }
        case RequestKind::judge_graph: {
            if (!body.contains("ratings") || !body.at("ratings").is_array())
                throw SchemaError("missing field 'ratings'");
            std::set<std::string> seen;
            for (const auto& entry : body.at("ratings")) {
                if (!entry.is_object() || !entry.contains("dimension") ||
                    !entry.at("dimension").is_string())
                    throw SchemaError("missing field 'dimension'");
                if (!seen.insert(entry.at("dimension").get<std::string>()).second)
                    throw SchemaError("duplicate dimension in 'ratings'");
                require_logprob_map(entry);
            }
            break;
        }
    }
}

json EvaluatorGateway::call(const EvaluatorRequest& request) {
    std::uint64_t tokens = 0;
    json body;
    std::string last_error;
    const int attempts = 1 + std::max(0, options_.max_retries);
    bool ok = false;
    for (int attempt = 0; attempt < attempts && !ok; ++attempt) {
        try {
            body = backend_->complete(request);
            if (body.is_object() && body.contains("__usage_tokens")) {
                tokens = body.at("__usage_tokens").get<std::uint64_t>();
                body.erase("__usage_tokens");
            }
            validate_response(request.kind, body, request.payload);
            ok = true;
        } catch (const TransientError& err) {
            last_error = err.what();
            if (options_.backoff_enabled && attempt + 1 < attempts) {
                auto delay = std::chrono::milliseconds(options_.backoff_initial_ms << attempt);
                std::this_thread::sleep_for(delay);
            }
        } catch (const SchemaError& err) {
            last_error = err.what();
        }
    }
    ledger_.record(request.kind, tokens);
    if (!ok)
        throw SchemaError(std::string(to_string(request.kind)) + " call failed after " +
                          std::to_string(attempts) + " attempts: " + last_error);
    return body;
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

std::string CacheKey::digest() const {
    std::uint64_t h = fnv1a64(substrate_hash);
    h = fnv1a64("\x1e", h);
    h = fnv1a64(state_fingerprint, h);
    h = fnv1a64("\x1e", h);
    h = fnv1a64(policy_version, h);
    // second lane decorrelates the two halves of the 128-bit name
    std::uint64_t h2 = fnv1a64(policy_version, fnv1a64(state_fingerprint, fnv1a64(substrate_hash, 0x9e3779b97f4a7c15ULL)));
    return hex64(h) + hex64(h2);
}

JsonCacheStore::JsonCacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

json JsonCacheStore::get_or_compute(const CacheKey& key, const std::function<json()>& compute) {
    const auto file = dir_ / (key.digest() + ".json");
    {
        std::lock_guard<std::mutex> lock(io_mutex_);
        if (std::filesystem::exists(file)) {
            try {
                json stored = json::parse(read_text_file(file));
                if (stored.at("key").at("substrate_hash") == key.substrate_hash &&
                    stored.at("key").at("state_fingerprint") == key.state_fingerprint &&
                    stored.at("key").at("policy_version") == key.policy_version) {
                    hits_.fetch_add(1);
                    return stored.at("value");
                }
            } catch (const std::exception& err) {
                std::cerr << "warning: corrupt cache entry " << file.string() << " (" << err.what()
                          << "), recomputing\n";
            }
        }
    }
    misses_.fetch_add(1);
    json value = compute();
    json stored{{"key",
                 {{"substrate_hash", key.substrate_hash},
                  {"state_fingerprint", key.state_fingerprint},
                  {"policy_version", key.policy_version}}},
                {"value", value}};
    {
        std::lock_guard<std::mutex> lock(io_mutex_);
        write_text_file_atomic(file, stored.dump() + "\n");
    }
    return value;
}

JsonCacheStore::Stats JsonCacheStore::stats(const std::filesystem::path& dir) {
    Stats s;
    if (!std::filesystem::exists(dir)) return s;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        ++s.files;
        s.bytes += entry.file_size();
    }
    return s;
}

std::uint64_t JsonCacheStore::clear(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir)) return 0;
    std::uint64_t removed = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            std::filesystem::remove(entry.path());
            ++removed;
        }
    }
    return removed;
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(BackendProfile profile) : profile_(std::move(profile)) {}

json HttpBackend::complete(const EvaluatorRequest& request) {
    httplib::Client client(profile_.base_url);
    client.set_connection_timeout(profile_.timeout_s);
    client.set_read_timeout(profile_.timeout_s);

    httplib::Headers headers;
    if (!profile_.auth_env.empty()) {
        if (const char* token = std::getenv(profile_.auth_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const bool wants_logprobs = request.kind != RequestKind::rank_batch;
    json body{{"model", profile_.model},
              {"temperature", 0},
              {"logprobs", wants_logprobs},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
              {"metadata", json{{"kind", to_string(request.kind)}}},
              {"input", request.payload}};

    auto result = client.Post(profile_.path, headers, body.dump(), "application/json");
    if (!result)
        throw TransientError("http transport error: " + httplib::to_string(result.error()));
    if (result->status >= 500)
        throw TransientError("http status " + std::to_string(result->status));
    if (result->status != 200)
        throw std::runtime_error("http status " + std::to_string(result->status) + ": " + result->body);

    json envelope;
    try {
        envelope = json::parse(result->body);
    } catch (const json::exception& err) {
        throw SchemaError(std::string("response is not JSON: ") + err.what());
    }
    try {
        json content = json::parse(
            envelope.at("choices").at(0).at("message").at("content").get<std::string>());
        if (envelope.contains("usage") && envelope.at("usage").contains("total_tokens"))
            content["__usage_tokens"] = envelope.at("usage").at("total_tokens").get<std::uint64_t>();
        return content;
    } catch (const json::exception& err) {
        throw SchemaError(std::string("malformed completion envelope: ") + err.what());
    }
}

// ---------------------------------------------------------------------------
// Table backend
// ---------------------------------------------------------------------------

TableBackend::TableBackend(json table) : table_(std::move(table)) {}

TableBackend TableBackend::from_file(const std::filesystem::path& file) {
    return TableBackend(json::parse(read_text_file(file)));
}

std::string TableBackend::request_digest(const EvaluatorRequest& request) {
    std::uint64_t h = fnv1a64(to_string(request.kind));
    h = fnv1a64(request.payload.dump(), h);
    return hex64(h);
}

json TableBackend::complete(const EvaluatorRequest& request) {
    const std::string digest = request_digest(request);
    const auto& entries = table_.contains("entries") ? table_.at("entries") : table_;
    if (auto it = entries.find(digest); it != entries.end()) return *it;
    throw std::runtime_error("table backend: no fixture entry for request digest " + digest);
}

// ---------------------------------------------------------------------------
// Proximity backend
// ---------------------------------------------------------------------------

namespace {
constexpr int kUnreachable = std::numeric_limits<int>::max();
}

ProximityBackend::ProximityBackend(const KnowledgeGraph& graph, std::string salt)
    : graph_(graph), salt_(std::move(salt)) {}

std::string ProximityBackend::name() const {
    return salt_.empty() ? "mock:proximity" : "mock:proximity:" + salt_;
}

const std::vector<int>& ProximityBackend::distances_to(const std::string& target) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = distance_cache_.find(target);
    if (it != distance_cache_.end()) return it->second;

    // reverse BFS from the target over directed edges
    const std::size_t n = graph_.node_count();
    std::vector<std::vector<std::size_t>> reverse(n);
    for (std::size_t u = 0; u < n; ++u)
        for (const OutEdge& e : graph_.out_edges_at(u)) reverse[e.target_index].push_back(u);

    std::vector<int> dist(n, kUnreachable);
    std::deque<std::size_t> queue;
    const std::size_t zi = graph_.index_of(target);
    dist[zi] = 0;
    queue.push_back(zi);
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t u : reverse[v]) {
            if (dist[u] != kUnreachable) continue;
            dist[u] = dist[v] + 1;
            queue.push_back(u);
        }
    }
    return distance_cache_.emplace(target, std::move(dist)).first->second;
}

int ProximityBackend::distance_to_target(const std::string& from, const std::string& target) {
    return distances_to(target)[graph_.index_of(from)];
}

json ProximityBackend::complete(const EvaluatorRequest& request) {
    const json& payload = request.payload;
    switch (request.kind) {
        case RequestKind::rank_batch: {
            const std::string z = payload.at("state").at("target").get<std::string>();
            const bool final_pass = payload.value("final_pass", false);
            struct Row {
                long index;
                double score;
                int dist;
            };
            std::vector<Row> rows;
            for (const auto& action : payload.at("actions")) {
                long index = action.at("index").get<long>();
                int d = distance_to_target(action.at("target").get<std::string>(), z);
                double score = (d == kUnreachable) ? -1e6 : -static_cast<double>(d);
                rows.push_back({index, score, d});
            }
            std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.index < b.index;
            });
            json rankings = json::array();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                json entry{{"index", rows[i].index},
                           {"rank", static_cast<long>(i + 1)},
                           {"score", rows[i].score}};
                if (final_pass)
                    entry["justification"] =
                        rows[i].dist == kUnreachable
                            ? "no route to the target from this node"
                            : "graph distance to target: " + std::to_string(rows[i].dist);
                rankings.push_back(std::move(entry));
            }
            return json{{"rankings", std::move(rankings)}};
        }
        case RequestKind::score_states: {
            const std::string z = payload.at("target").get<std::string>();
            std::vector<int> rubric;
            for (const auto& label : payload.at("rubric")) rubric.push_back(label.get<int>());
            const int lo = rubric.front();
            const int hi = rubric.back();
            json scores = json::array();
            for (const auto& state : payload.at("states")) {
                int d = distance_to_target(state.at("current").get<std::string>(), z);
                int label = (d == kUnreachable) ? lo : std::clamp(hi - d, lo, hi);
                json lps = json::object();
                lps[std::to_string(label)] = 0.0;
                scores.push_back(json{{"index", state.at("index").get<long>()},
                                      {"label_logprobs", std::move(lps)}});
            }
            return json{{"scores", std::move(scores)}};
        }
        case RequestKind::judge_graph: {
            // permutation-invariant content hash: sorted serialization lines
            std::string text = payload.at("serialization").get<std::string>();
            std::vector<std::string> lines;
            std::size_t start = 0;
            while (start < text.size()) {
                std::size_t end = text.find('\n', start);
                if (end == std::string::npos) end = text.size();
                lines.push_back(text.substr(start, end - start));
                start = end + 1;
            }
            std::sort(lines.begin(), lines.end());
            std::uint64_t content = fnv1a64(salt_);
            for (const std::string& line : lines) content = fnv1a64(line, content);

            json ratings = json::array();
            for (const auto& dim : payload.at("dimensions")) {
                const std::string name = dim.get<std::string>();
                std::uint64_t h = fnv1a64(name, content);
                int center = 2 + static_cast<int>(h % 3); // 2..4
                json lps = json::object();
                lps[std::to_string(center)] = std::log(0.70);
                if (center - 1 >= 1) lps[std::to_string(center - 1)] = std::log(0.15);
                if (center + 1 <= 5) lps[std::to_string(center + 1)] = std::log(0.15);
                ratings.push_back(json{{"dimension", name}, {"label_logprobs", std::move(lps)}});
            }
            return json{{"ratings", std::move(ratings)}};
        }
    }
    throw std::runtime_error("proximity backend: unsupported request kind");
}

// ---------------------------------------------------------------------------
// Constant backend
// ---------------------------------------------------------------------------

json ConstantBackend::complete(const EvaluatorRequest& request) {
    const json& payload = request.payload;
    switch (request.kind) {
        case RequestKind::rank_batch: {
            json rankings = json::array();
            long rank = 1;
            for (const auto& action : payload.at("actions"))
                rankings.push_back(json{{"index", action.at("index").get<long>()},
                                        {"rank", rank++},
                                        {"score", 0.0}});
            return json{{"rankings", std::move(rankings)}};
        }
        case RequestKind::score_states: {
            json scores = json::array();
            for (const auto& state : payload.at("states")) {
                json lps = json::object();
                lps[std::to_string(label_)] = 0.0;
                scores.push_back(json{{"index", state.at("index").get<long>()},
                                      {"label_logprobs", std::move(lps)}});
            }
            return json{{"scores", std::move(scores)}};
        }
        case RequestKind::judge_graph: {
            json ratings = json::array();
            for (const auto& dim : payload.at("dimensions")) {
                json lps = json::object();
                lps[std::to_string(label_)] = 0.0;
                ratings.push_back(
                    json{{"dimension", dim.get<std::string>()}, {"label_logprobs", std::move(lps)}});
            }
            return json{{"ratings", std::move(ratings)}};
        }
    }
    throw std::runtime_error("constant backend: unsupported request kind");
}

// ---------------------------------------------------------------------------
// Adversarial backend
// ---------------------------------------------------------------------------

AdversarialBackend::AdversarialBackend(std::shared_ptr<EvaluatorBackend> inner, int fail_count)
    : inner_(std::move(inner)), fail_count_(fail_count) {}

json AdversarialBackend::complete(const EvaluatorRequest& request) {
    const int call = calls_.fetch_add(1);
    if (call >= fail_count_) return inner_->complete(request);
    switch (call % 3) {
        case 0: return json::object(); // required top-level field missing
        case 1: return json{{"rankings", 42}, {"scores", 42}, {"ratings", 42}}; // wrong type
        default: {
            if (request.kind == RequestKind::rank_batch) {
                json rankings = json::array();
                for (const auto& action : request.payload.at("actions"))
                    rankings.push_back(json{{"index", action.at("index").get<long>()},
                                            {"rank", 1}, // every rank 1: not a permutation
                                            {"score", 0.0}});
                return json{{"rankings", std::move(rankings)}};
            }
            return json{{"scores", json::array({json{{"index", 0}}})},
                        {"ratings", json::array({json{{"dimension", "x"}}})}};
        }
    }
}

// ---------------------------------------------------------------------------
// Backend factory
// ---------------------------------------------------------------------------

std::shared_ptr<EvaluatorBackend> make_backend(const std::string& spec, const KnowledgeGraph& graph,
                                               const json& profiles) {
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = s.find(':', start);
            if (pos == std::string::npos) {
                parts.push_back(s.substr(start));
                break;
            }
            parts.push_back(s.substr(start, pos - start));
            start = pos + 1;
        }
        return parts;
    };
    const auto parts = split(spec);
    if (parts.empty()) throw std::runtime_error("empty backend spec");

    if (parts[0] == "mock") {
        if (parts.size() < 2) throw std::runtime_error("backend spec 'mock:' needs a mock name");
        const std::string& kind = parts[1];
        if (kind == "proximity")
            return std::make_shared<ProximityBackend>(graph, parts.size() > 2 ? parts[2] : "");
        if (kind == "constant")
            return std::make_shared<ConstantBackend>(parts.size() > 2 ? std::stoi(parts[2]) : 4);
        if (kind == "table") {
            if (parts.size() < 3) throw std::runtime_error("mock:table needs a fixture file path");
            return std::make_shared<TableBackend>(TableBackend::from_file(parts[2]));
        }
        if (kind == "adversarial") {
            int fails = parts.size() > 2 ? std::stoi(parts[2]) : 1000000;
            return std::make_shared<AdversarialBackend>(std::make_shared<ProximityBackend>(graph),
                                                        fails);
        }
        throw std::runtime_error("unknown mock backend: " + kind);
    }
    if (parts[0] == "http") {
        if (parts.size() < 2) throw std::runtime_error("backend spec 'http:' needs a profile name");
        if (!profiles.contains(parts[1]))
            throw std::runtime_error("unknown http profile: " + parts[1]);
        const json& p = profiles.at(parts[1]);
        BackendProfile profile;
        profile.base_url = p.at("base_url").get<std::string>();
        profile.path = p.value("path", profile.path);
        profile.model = p.value("model", std::string{});
        profile.auth_env = p.value("auth_env", std::string{});
        profile.timeout_s = p.value("timeout_s", profile.timeout_s);
        profile.max_retries = p.value("max_retries", profile.max_retries);
        return std::make_shared<HttpBackend>(std::move(profile));
    }
    throw std::runtime_error("unknown backend spec: " + spec);
}

} // namespace tessera
