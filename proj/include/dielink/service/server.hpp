#pragma once

#include <memory>

#include "dielink/service/config.hpp"
#include "dielink/service/job_runner.hpp"
#include "dielink/store/datastore.hpp"

namespace httplib {
class Server;
}

namespace dielink::service {

class BindError : public Error {
public:
    using Error::Error;
};

/// HTTP API over a Datastore in config.data_dir. All /api routes except
/// /api/health need "Authorization: Bearer <token>".
class Server {
public:
    explicit Server(ServiceConfig config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Bind the listening socket; returns the port. Throws BindError.
    int bind();
    /// Serve until stop(); call bind() first.
    void run();
    void stop();

    int port() const noexcept { return port_; }
    store::Datastore& datastore() noexcept { return *store_; }
    JobRunner& jobs() noexcept { return *jobs_; }

private:
    void routes();

    ServiceConfig config_;
    std::unique_ptr<store::Datastore> store_;
    std::unique_ptr<JobRunner> jobs_;
    std::unique_ptr<httplib::Server> http_;
    int port_ = 0;
};

}  // namespace dielink::service
