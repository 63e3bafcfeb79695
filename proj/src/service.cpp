#include "lte/service.hpp"

#include "http_util.hpp"
#include "lte/error.hpp"
#include "lte/text.hpp"

#include <charconv>

namespace lte::service {

using nlohmann::json;

namespace {

Reply bad_request(const std::string& field, const std::string& message) {
    return {400, {{"error", message}, {"field", field}}};
}

// Parses a JSON object body, or produces the 400 reply.
std::optional<json> parse_object(const std::string& body, Reply& error) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        error = bad_request("body", "malformed JSON");
        return std::nullopt;
    }
    if (!j.is_object()) {
        error = bad_request("body", "expected a JSON object");
        return std::nullopt;
    }
    return j;
}

bool optional_string_field(const json& j, const char* field, std::string& out, Reply& error) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return true;
    if (!it->is_string()) {
        error = bad_request(field, std::string("'") + field + "' must be a string");
        return false;
    }
    out = it->get<std::string>();
    return true;
}

} // namespace

ServiceConfig service_config_from_json(const json& j) {
    ServiceConfig c;
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.k = j.value("k", c.k);
    c.threads = j.value("threads", c.threads);
    if (j.contains("template")) c.prompt = template_from_json(j.at("template"));
    c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
    c.temperature = j.value("temperature", c.temperature);
    if (c.k < 1) throw DataError("service: k must be >= 1");
    return c;
}

Service::Service(ServiceConfig cfg, MemoryBank bank, std::shared_ptr<Backend> backend)
    : cfg_(std::move(cfg)), bank_(std::move(bank)), backend_(std::move(backend)),
      server_(std::make_unique<httplib::Server>()) {
    for (const auto& e : bank_.entries()) next_edit_id_ = std::max<std::uint64_t>(next_edit_id_, e.entry_id + 1);
    install_routes();
}

Service::~Service() { stop(); }

Reply Service::add_edit(const std::string& body) {
    Reply error;
    auto j = parse_object(body, error);
    if (!j) return error;
    EditDescriptor d;
    if (!optional_string_field(*j, "statement", d.statement, error)) return error;
    d.statement = text::flatten_newlines(d.statement);
    if (d.statement.empty()) return bad_request("statement", "'statement' is required and must be non-empty");
    if (!optional_string_field(*j, "edit_input", d.edit_input, error)) return error;
    if (!optional_string_field(*j, "edit_target", d.edit_target, error)) return error;
    if (!optional_string_field(*j, "id", d.id, error)) return error;
    if (d.id.empty()) d.id = "edit-" + std::to_string(next_edit_id_++);
    try {
        const auto id = bank_.add_edit(d);
        return {200, {{"entry_id", id}}};
    } catch (const BackendError& e) {
        return {502, {{"error", "embedding backend failure"}, {"upstream", e.what()}}};
    }
}

Reply Service::query(const std::string& body) {
    Reply error;
    auto j = parse_object(body, error);
    if (!j) return error;
    std::string question;
    if (!optional_string_field(*j, "question", question, error)) return error;
    if (question.empty()) return bad_request("question", "'question' is required and must be non-empty");
    int k = cfg_.k;
    if (auto it = j->find("k"); it != j->end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<int>() < 1) return bad_request("k", "'k' must be an integer >= 1");
        k = it->get<int>();
    }

    try {
        const auto retrieval = bank_.retrieve(question, k);
        std::vector<std::string> statements;
        json retrieved = json::array();
        for (const auto& s : retrieval.entries) {
            statements.push_back(s.entry.descriptor.statement);
            retrieved.push_back(
                {{"entry_id", s.entry.entry_id}, {"statement", s.entry.descriptor.statement}, {"score", s.score}});
        }
        GenerationRequest req;
        req.prompt = render(std::move(statements), question, cfg_.prompt).rendered;
        req.max_new_tokens = cfg_.max_new_tokens;
        req.temperature = cfg_.temperature;
        const auto result = backend_->generate(req);
        return {200, {{"answer", result.text}, {"retrieved", std::move(retrieved)}, {"rendered_prompt", req.prompt}}};
    } catch (const BackendError& e) {
        return {502, {{"error", "backend failure"}, {"upstream", e.what()}, {"status", e.status()}}};
    }
}

Reply Service::remove_edit(const std::string& id_text) {
    EntryId id = 0;
    const auto* first = id_text.data();
    const auto* last = first + id_text.size();
    auto [ptr, ec] = std::from_chars(first, last, id);
    if (ec != std::errc() || ptr != last) return bad_request("id", "entry id must be a non-negative integer");
    if (!bank_.remove(id)) return {404, {{"error", "unknown entry id " + id_text}}};
    return {200, {{"ok", true}}};
}

Reply Service::health() const { return {200, {{"ok", true}, {"bank_size", bank_.size()}}}; }

Reply Service::snapshot(const std::string& body) const {
    Reply error;
    auto j = parse_object(body, error);
    if (!j) return error;
    std::string path;
    if (!optional_string_field(*j, "path", path, error)) return error;
    if (path.empty()) return bad_request("path", "'path' is required");
    try {
        bank_.snapshot(path);
    } catch (const Error& e) {
        return {500, {{"error", e.what()}}};
    }
    return {200, {{"ok", true}, {"path", path}, {"count", bank_.size()}}};
}

void Service::install_routes() {
    auto send = [](httplib::Response& res, const Reply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    };
    auto& s = *server_;
    s.new_task_queue = [n = std::max(1u, cfg_.threads)] { return new httplib::ThreadPool(n); };
    s.Post("/edits", [this, send](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        send(res, add_edit(req.body));
    });
    s.Post("/query", [this, send](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        send(res, query(req.body));
    });
    s.Delete(R"(/edits/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        send(res, remove_edit(req.matches[1]));
    });
    s.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
        ++requests_;
        send(res, health());
    });
    s.Post("/snapshot", [this, send](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        send(res, snapshot(req.body));
    });
    s.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, {500, {{"error", what}}});
    });
}

int Service::start() {
    int port = cfg_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(cfg_.host);
    } else if (!server_->bind_to_port(cfg_.host, port)) {
        port = -1;
    }
    if (port < 0) throw Error("service: cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void Service::run() {
    if (!server_->listen(cfg_.host, cfg_.port))
        throw Error("service: cannot listen on " + cfg_.host + ":" + std::to_string(cfg_.port));
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace lte::service
