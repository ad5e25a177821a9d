#include "cne/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace cne {
namespace {

int default_thread_count() {
    if (const char* env = std::getenv("CNE_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int g_threads = 0;  // 0 = not yet resolved

}  // namespace

int thread_count() {
    if (g_threads == 0) g_threads = default_thread_count();
    return g_threads;
}

void set_thread_count(int n) { g_threads = n >= 1 ? n : 1; }

}  // namespace cne
