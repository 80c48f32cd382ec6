#include "atmn/scheduler.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

namespace atmn {

WorkPlan plan_batches(std::size_t m, std::uint32_t batch_size, std::uint32_t workers) {
    if (m < 1) {
        throw std::invalid_argument("plan_batches: job count must be >= 1");
    }
    if (batch_size < 1 || workers < 1) {
        throw std::invalid_argument("plan_batches: batch_size and workers must be >= 1");
    }
    WorkPlan plan;
    plan.job_count = m;
    plan.batch_size = batch_size;
    plan.workers = workers;
    const std::size_t n_batches = (m + batch_size - 1) / batch_size;
    plan.batches.reserve(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        const std::size_t first = b * batch_size;
        const std::size_t count = std::min<std::size_t>(batch_size, m - first);
        plan.batches.push_back({static_cast<std::uint32_t>(b % workers), first, count});
    }
    return plan;
}

std::uint32_t default_workers(std::size_t jobs) {
    const std::uint32_t hw = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<std::uint32_t>(std::min<std::size_t>(hw, std::max<std::size_t>(1, jobs)));
}

std::vector<double> execute_plan(const WorkPlan& plan,
                                 const std::function<double(std::size_t)>& evaluator) {
    if (plan.job_count < 1) {
        throw std::invalid_argument("execute_plan: empty plan");
    }
    std::vector<double> results(plan.job_count, 0.0);

    struct Failure {
        std::size_t job_id;
        std::exception_ptr error;
    };
    std::vector<Failure> failures;
    std::mutex failures_mutex;

    auto run_worker = [&](std::uint32_t worker) {
        for (const WorkPlan::Batch& batch : plan.batches) {
            if (batch.worker != worker) continue;
            for (std::size_t j = 0; j < batch.count; ++j) {
                const std::size_t job = batch.first + j;
                try {
                    results[job] = evaluator(job);  // index-addressed write, no lock
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failures_mutex);
                    failures.push_back({job, std::current_exception()});
                    return;
                }
            }
        }
    };

    const std::uint32_t active =
        static_cast<std::uint32_t>(std::min<std::size_t>(plan.workers, plan.batches.size()));
    std::vector<std::thread> threads;
    threads.reserve(active);
    for (std::uint32_t w = 0; w < active; ++w) {
        threads.emplace_back(run_worker, w);
    }
    for (std::thread& t : threads) t.join();

    if (!failures.empty()) {
        auto worst = std::min_element(
            failures.begin(), failures.end(),
            [](const Failure& a, const Failure& b) { return a.job_id < b.job_id; });
        try {
            std::rethrow_exception(worst->error);
        } catch (const std::exception& e) {
            throw JobFailure(worst->job_id, e.what());
        } catch (...) {
            throw JobFailure(worst->job_id, "unknown error");
        }
    }
    return results;
}

}  // namespace atmn
