#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace sdmaf {

/// Parallel ordered map: jobs are pulled one at a time from `producer`
/// (under a lock, so the producer may be stateful), transformed by
/// `mapper` on worker threads, and handed to `consumer` strictly in
/// production order — output is byte-identical for any worker count.
/// A bounded reorder buffer applies backpressure when one job runs long.
/// The first exception from any stage is rethrown on the calling thread.
template <typename Producer, typename Mapper, typename Consumer>
void run_ordered(Producer producer, Mapper mapper, Consumer consumer, int workers) {
    if (workers <= 1) {
        for (;;) {
            auto job = producer();
            if (!job) return;
            consumer(mapper(std::move(*job)));
        }
    }

    using Job = typename decltype(producer())::value_type;
    using Out = decltype(mapper(std::declval<Job>()));

    struct State {
        std::mutex in_mx;
        bool exhausted = false;
        std::uint64_t seq_in = 0;

        std::mutex out_mx;
        std::condition_variable cv;
        std::uint64_t seq_out = 0;
        std::map<std::uint64_t, Out> pending;
        std::size_t cap = 0;
        std::exception_ptr error;
    } st;
    st.cap = static_cast<std::size_t>(workers) * 8 + 64;

    const auto record_error = [&st]() {
        {
            std::lock_guard<std::mutex> lk(st.out_mx);
            if (!st.error) st.error = std::current_exception();
        }
        {
            std::lock_guard<std::mutex> lk(st.in_mx);
            st.exhausted = true;
        }
        st.cv.notify_all();
    };

    const auto worker = [&]() {
        try {
            for (;;) {
                std::optional<Job> job;
                std::uint64_t seq = 0;
                {
                    std::lock_guard<std::mutex> lk(st.in_mx);
                    if (st.exhausted) return;
                    job = producer();
                    if (!job) {
                        st.exhausted = true;
                        st.cv.notify_all();
                        return;
                    }
                    seq = st.seq_in++;
                }
                Out out = mapper(std::move(*job));
                {
                    std::unique_lock<std::mutex> lk(st.out_mx);
                    st.cv.wait(lk, [&] {
                        return st.error || seq <= st.seq_out + st.cap;
                    });
                    if (st.error) return;
                    st.pending.emplace(seq, std::move(out));
                    while (!st.pending.empty() && st.pending.begin()->first == st.seq_out) {
                        auto node = st.pending.extract(st.pending.begin());
                        consumer(std::move(node.mapped()));
                        ++st.seq_out;
                    }
                    st.cv.notify_all();
                }
            }
        } catch (...) {
            record_error();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (st.error) std::rethrow_exception(st.error);
}

}  // namespace sdmaf
