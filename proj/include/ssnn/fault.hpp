#ifndef SSNN_FAULT_HPP
#define SSNN_FAULT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace ssnn {

// One permanently stuck output bit of a PE accumulator.
struct StuckAtFault {
    int pe_row = 0;
    int pe_col = 0;
    int bit = 0;        // 0 = LSB, 31 = sign bit
    int stuck_value = 0; // 0 or 1

    bool operator==(const StuckAtFault&) const = default;
};

// Which bit the worst-case experiments pin when nothing else is specified:
// sign bit, stuck at 1.
inline constexpr int kWorstCaseBit = 31;
inline constexpr int kWorstCaseStuckValue = 1;

// Precomputed masks for one PE's fault set.
struct FaultMasks {
    std::uint32_t or_mask = 0;   // bits stuck at 1
    std::uint32_t and_mask = ~0u; // bits stuck at 0 are cleared here
};

inline std::int32_t apply_masks(std::int32_t value, const FaultMasks& m) {
    const std::uint32_t v = static_cast<std::uint32_t>(value);
    return static_cast<std::int32_t>((v | m.or_mask) & m.and_mask);
}

// Forces each fault's bit to its stuck value; all other bits pass through.
std::int32_t inject_word(std::int32_t value, const std::vector<StuckAtFault>& faults_at_pe);

// The defect set of one fabricated array instance.
class FaultMap {
public:
    FaultMap() = default;
    FaultMap(int grid_size, std::vector<StuckAtFault> faults, std::uint64_t seed);

    int grid_size() const { return n_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<StuckAtFault>& faults() const { return faults_; }
    std::size_t fault_count() const { return faults_.size(); }
    std::size_t faulty_pe_count() const { return masks_.size(); }

    bool pe_is_faulty(int row, int col) const { return masks_.count(key(row, col)) != 0; }

    // nullptr when the PE is healthy.
    const FaultMasks* masks_at(int row, int col) const {
        auto it = masks_.find(key(row, col));
        return it == masks_.end() ? nullptr : &it->second;
    }

    std::string serialize() const;
    static FaultMap parse(std::istream& in);
    static FaultMap parse_string(const std::string& text);

private:
    static std::uint64_t key(int row, int col) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
               static_cast<std::uint32_t>(col);
    }
    void build_index();

    int n_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<StuckAtFault> faults_;
    std::unordered_map<std::uint64_t, FaultMasks> masks_;
};

struct BitPolicy {
    enum class Kind { FixedBit, RandomBit };
    Kind kind = Kind::FixedBit;
    int bit = kWorstCaseBit;
    int stuck_value = kWorstCaseStuckValue;

    static BitPolicy fixed(int bit, int value) { return {Kind::FixedBit, bit, value}; }
    static BitPolicy random() { return {Kind::RandomBit, 0, 0}; }
};

// Exactly faulty_pe_count distinct PEs, chosen uniformly without replacement,
// one fault per PE. The PE choice depends only on (N, count, seed), so maps
// with equal seeds are paired across bit policies.
FaultMap generate_fault_map(int grid_size, std::size_t faulty_pe_count, const BitPolicy& policy,
                            std::uint64_t seed);

// round(percent/100 * N^2)
std::size_t percent_to_count(int grid_size, double percent);

} // namespace ssnn

#endif
