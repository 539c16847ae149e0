#include "ssnn/fault.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ssnn/rng.hpp"

namespace ssnn {

namespace {

void check_fault(const StuckAtFault& f, int n) {
    if (f.pe_row < 0 || f.pe_row >= n || f.pe_col < 0 || f.pe_col >= n)
        throw std::invalid_argument("fault map: PE coordinate outside " + std::to_string(n) +
                                    "x" + std::to_string(n) + " grid");
    if (f.bit < 0 || f.bit >= 32)
        throw std::invalid_argument("fault map: bit index outside [0, 32)");
    if (f.stuck_value != 0 && f.stuck_value != 1)
        throw std::invalid_argument("fault map: stuck value must be 0 or 1");
}

} // namespace

std::int32_t inject_word(std::int32_t value, const std::vector<StuckAtFault>& faults_at_pe) {
    FaultMasks m;
    for (const StuckAtFault& f : faults_at_pe) {
        if (f.bit < 0 || f.bit >= 32) throw std::invalid_argument("inject_word: bit outside [0, 32)");
        const std::uint32_t bit = 1u << f.bit;
        if (f.stuck_value == 1)
            m.or_mask |= bit;
        else
            m.and_mask &= ~bit;
    }
    return apply_masks(value, m);
}

FaultMap::FaultMap(int grid_size, std::vector<StuckAtFault> faults, std::uint64_t seed)
    : n_(grid_size), seed_(seed), faults_(std::move(faults)) {
    if (n_ <= 0) throw std::invalid_argument("fault map: grid size must be positive");
    for (const StuckAtFault& f : faults_) check_fault(f, n_);
    // canonical order makes serialization and iteration deterministic
    std::sort(faults_.begin(), faults_.end(), [](const StuckAtFault& a, const StuckAtFault& b) {
        return std::tie(a.pe_row, a.pe_col, a.bit) < std::tie(b.pe_row, b.pe_col, b.bit);
    });
    for (std::size_t i = 1; i < faults_.size(); ++i) {
        const auto& a = faults_[i - 1];
        const auto& b = faults_[i];
        if (a.pe_row == b.pe_row && a.pe_col == b.pe_col && a.bit == b.bit)
            throw std::invalid_argument("fault map: duplicate (row, col, bit) entry");
    }
    build_index();
}

void FaultMap::build_index() {
    masks_.clear();
    for (const StuckAtFault& f : faults_) {
        FaultMasks& m = masks_[key(f.pe_row, f.pe_col)];
        const std::uint32_t bit = 1u << f.bit;
        if (f.stuck_value == 1)
            m.or_mask |= bit;
        else
            m.and_mask &= ~bit;
    }
}

std::string FaultMap::serialize() const {
    std::ostringstream out;
    out << "N " << n_ << " seed " << seed_ << "\n";
    for (const StuckAtFault& f : faults_)
        out << f.pe_row << " " << f.pe_col << " " << f.bit << " " << f.stuck_value << "\n";
    return out.str();
}

FaultMap FaultMap::parse(std::istream& in) {
    std::string tag_n, tag_seed;
    int n = 0;
    std::uint64_t seed = 0;
    if (!(in >> tag_n >> n >> tag_seed >> seed) || tag_n != "N" || tag_seed != "seed")
        throw std::runtime_error("fault map: malformed header, expected 'N <size> seed <seed>'");
    std::vector<StuckAtFault> faults;
    StuckAtFault f;
    while (in >> f.pe_row >> f.pe_col >> f.bit >> f.stuck_value) faults.push_back(f);
    if (!in.eof() && in.fail()) {
        in.clear();
        std::string trailing;
        std::getline(in, trailing);
        throw std::runtime_error("fault map: malformed fault line near '" + trailing + "'");
    }
    return FaultMap(n, std::move(faults), seed);
}

FaultMap FaultMap::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

FaultMap generate_fault_map(int grid_size, std::size_t faulty_pe_count, const BitPolicy& policy,
                            std::uint64_t seed) {
    if (grid_size <= 0) throw std::invalid_argument("generate_fault_map: grid size must be positive");
    const std::size_t total = static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size);
    if (faulty_pe_count > total)
        throw std::invalid_argument("generate_fault_map: faulty_pe_count " +
                                    std::to_string(faulty_pe_count) + " exceeds " +
                                    std::to_string(total) + " PEs");
    if (policy.kind == BitPolicy::Kind::FixedBit) {
        StuckAtFault probe{0, 0, policy.bit, policy.stuck_value};
        check_fault(probe, grid_size);
    }

    // PE positions are drawn before any bit draws, so equal seeds give equal
    // PE sets under every bit policy (paired experiment design).
    Rng rng(seed);
    const auto cells = rng.sample_without_replacement(total, faulty_pe_count);

    std::vector<StuckAtFault> faults;
    faults.reserve(faulty_pe_count);
    for (std::uint64_t cell : cells) {
        StuckAtFault f;
        f.pe_row = static_cast<int>(cell / static_cast<std::uint64_t>(grid_size));
        f.pe_col = static_cast<int>(cell % static_cast<std::uint64_t>(grid_size));
        if (policy.kind == BitPolicy::Kind::FixedBit) {
            f.bit = policy.bit;
            f.stuck_value = policy.stuck_value;
        } else {
            f.bit = static_cast<int>(rng.below(32));
            f.stuck_value = static_cast<int>(rng.below(2));
        }
        faults.push_back(f);
    }
    return FaultMap(grid_size, std::move(faults), seed);
}

std::size_t percent_to_count(int grid_size, double percent) {
    if (grid_size <= 0) throw std::invalid_argument("percent_to_count: grid size must be positive");
    if (!(percent >= 0.0 && percent <= 100.0))
        throw std::invalid_argument("percent_to_count: percent outside [0, 100]");
    const double total = static_cast<double>(grid_size) * static_cast<double>(grid_size);
    return static_cast<std::size_t>(std::llround(percent / 100.0 * total));
}

} // namespace ssnn
