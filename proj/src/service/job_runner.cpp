#include "dielink/service/job_runner.hpp"

#include "dielink/imaging/image_io.hpp"
#include "dielink/imaging/normalize.hpp"
#include "dielink/scoring/score_dataset.hpp"

namespace dielink::service {

JobRunner::JobRunner(store::Datastore& store, scoring::ScoringParams params, int workers)
    : store_(store), params_(std::move(params)), workers_(workers), thread_([this] { loop(); }) {}

JobRunner::~JobRunner() { stop(); }

void JobRunner::submit(const std::string& dataset_id) {
    const auto record = store_.get(dataset_id);
    auto tracker = std::make_shared<Tracker>();
    tracker->total = scoring::DistanceMatrix::pair_count(record.coin_names.size());
    {
        std::lock_guard lock(mutex_);
        if (stopping_) return;
        trackers_[dataset_id] = std::move(tracker);
        queue_.push_back(dataset_id);
    }
    wake_.notify_one();
}

std::optional<JobProgress> JobRunner::progress(const std::string& dataset_id) const {
    std::lock_guard lock(mutex_);
    const auto it = trackers_.find(dataset_id);
    if (it == trackers_.end()) return std::nullopt;
    return JobProgress{it->second->done.load(std::memory_order_relaxed), it->second->total};
}

void JobRunner::wait_idle() {
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [this] { return (queue_.empty() && !busy_) || stopping_; });
}

void JobRunner::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
        queue_.clear();
    }
    wake_.notify_all();
    idle_.notify_all();
    if (thread_.joinable()) thread_.join();
}

void JobRunner::loop() {
    for (;;) {
        std::string id;
        std::shared_ptr<Tracker> tracker;
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            tracker = trackers_[id];
            busy_ = true;
        }
        run_job(id, *tracker);
        {
            std::lock_guard lock(mutex_);
            busy_ = false;
        }
        idle_.notify_all();
    }
}

void JobRunner::run_job(const std::string& id, Tracker& tracker) {
    try {
        std::vector<imaging::NormalizedImage> images;
        for (const auto& entry : store_.images(id))
            images.push_back(imaging::normalize_image(imaging::load_image(entry.bytes), entry.name));
        scoring::ScoreOptions options;
        options.threads = workers_;
        options.progress = &tracker.done;
        const auto matrix = scoring::score_dataset(images, params_, options);
        store_.complete_dataset(id, matrix);
    } catch (const std::exception& e) {
        try {
            store_.fail_dataset(id, e.what());
        } catch (const std::exception&) {
            // The record vanished or already left the computing state.
        }
    }
}

}  // namespace dielink::service
