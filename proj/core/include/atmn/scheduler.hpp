#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace atmn {

// Deterministic layout for a set of independent perturbation jobs: jobs are
// grouped into ceil(m / batch_size) batches, batches assigned round-robin
// to workers. Job ids are dense 0..m-1; the evaluator supplied to
// execute_plan owns the mapping from id to perturbation.
struct WorkPlan {
    struct Batch {
        std::uint32_t worker;
        std::size_t first;
        std::size_t count;
    };

    std::size_t job_count = 0;
    std::uint32_t batch_size = 1;
    std::uint32_t workers = 1;
    std::vector<Batch> batches;
};

WorkPlan plan_batches(std::size_t m, std::uint32_t batch_size, std::uint32_t workers);

// Hardware parallelism capped at the job count, never zero.
std::uint32_t default_workers(std::size_t jobs);

class JobFailure : public std::runtime_error {
  public:
    JobFailure(std::size_t job_id, const std::string& message)
        : std::runtime_error("job " + std::to_string(job_id) + ": " + message),
          job_id_(job_id) {}

    std::size_t job_id() const { return job_id_; }

  private:
    std::size_t job_id_;
};

// Runs every job exactly once on the plan's workers and returns results
// indexed by job id. The evaluator must be pure with respect to shared
// state; output is then independent of worker interleaving. Any job failure
// aborts with the lowest failing job id.
std::vector<double> execute_plan(const WorkPlan& plan,
                                 const std::function<double(std::size_t)>& evaluator);

}  // namespace atmn
