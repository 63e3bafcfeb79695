#pragma once

#include "lte/backend.hpp"
#include "lte/embed.hpp"
#include "lte/memory.hpp"
#include "lte/prompt.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace lte::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    /// 0 binds an ephemeral port.
    int port = 8080;
    int k = 3;
    unsigned threads = 8;
    PromptTemplate prompt;
    int max_new_tokens = 100;
    double temperature = 0.0;
};

/// {"host", "port", "k", "threads", "template", "max_new_tokens", "temperature"}.
ServiceConfig service_config_from_json(const nlohmann::json& j);

/// Response of a handler: HTTP status plus JSON body.
struct Reply {
    int status = 200;
    nlohmann::json body;
};

/// Live edit/query endpoints over one shared memory bank:
///   POST   /edits       {statement, edit_input?, edit_target?, id?} -> {entry_id}
///   POST   /query       {question, k?} -> {answer, retrieved, rendered_prompt}
///   DELETE /edits/{id}  -> {ok}
///   GET    /healthz     -> {ok, bank_size}
///   POST   /snapshot    {path} -> {ok, path, count}
/// Only retrieval memory is stored; nothing is trained at edit time.
class Service {
public:
    Service(ServiceConfig cfg, MemoryBank bank, std::shared_ptr<Backend> backend);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves on a background thread; returns the bound port.
    int start();
    /// Blocks serving on the calling thread.
    void run();
    void stop();

    // Handlers, callable without HTTP. Bodies are raw request text.
    Reply add_edit(const std::string& body);
    Reply query(const std::string& body);
    Reply remove_edit(const std::string& id);
    Reply health() const;
    Reply snapshot(const std::string& body) const;

    MemoryBank& bank() noexcept { return bank_; }
    std::uint64_t requests() const noexcept { return requests_.load(); }

private:
    void install_routes();

    ServiceConfig cfg_;
    MemoryBank bank_;
    std::shared_ptr<Backend> backend_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> next_edit_id_{0};
};

} // namespace lte::service
