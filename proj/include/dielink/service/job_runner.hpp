#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "dielink/scoring/pair_distance.hpp"
#include "dielink/store/datastore.hpp"

namespace dielink::service {

struct JobProgress {
    std::size_t done = 0;
    std::size_t total = 0;
};

/// Scores datasets one at a time on a background thread; pairs within a job
/// are spread over `workers` OpenMP threads.
class JobRunner {
public:
    JobRunner(store::Datastore& store, scoring::ScoringParams params, int workers);
    ~JobRunner();
    JobRunner(const JobRunner&) = delete;
    JobRunner& operator=(const JobRunner&) = delete;

    /// Queue a dataset in the computing state.
    void submit(const std::string& dataset_id);

    /// nullopt for datasets this runner never saw.
    std::optional<JobProgress> progress(const std::string& dataset_id) const;

    /// Block until the queue is empty and no job runs.
    void wait_idle();

    /// Finish the running job, drop queued ones, join.
    void stop();

private:
    struct Tracker {
        std::atomic<std::size_t> done{0};
        std::size_t total = 0;
    };

    void loop();
    void run_job(const std::string& id, Tracker& tracker);

    store::Datastore& store_;
    scoring::ScoringParams params_;
    int workers_;

    mutable std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable idle_;
    std::deque<std::string> queue_;
    std::map<std::string, std::shared_ptr<Tracker>> trackers_;
    bool busy_ = false;
    bool stopping_ = false;
    std::thread thread_;
};

}  // namespace dielink::service
