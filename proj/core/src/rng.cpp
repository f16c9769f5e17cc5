#include "ocelad/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace ocelad {

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::set_state(const std::string &state) {
    std::istringstream is(state);
    std::mt19937_64 engine;
    is >> engine;
    if (is.fail())
        throw std::invalid_argument("malformed random engine state");
    engine_ = engine;
}

std::uint64_t Rng::derive(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace ocelad
