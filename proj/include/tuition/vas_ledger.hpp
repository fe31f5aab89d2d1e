#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tuition/money.hpp"
#include "tuition/types.hpp"

namespace tuition::sim {

// What the bank believes happened to one client payment.
enum class VasOutcome {
  Pending,           // payment sent, no status or reversal result yet
  Success,           // PAYSTATUS SUCCESS received
  Refused,           // any other PAYSTATUS; the client keeps the money
  Reversed,          // status lost, REVSTATUS SUCCESS received
  Cancelled,         // status lost, REVSTATUS FAIL: the engine never booked it
  ReversalLost,      // status lost and the reversal went unanswered
  ClearingAccepted,  // clearing-routed payment the bank settled regardless
};
std::string_view to_string(VasOutcome outcome);
std::optional<VasOutcome> parse_vas_outcome(std::string_view text);

struct VasEntry {
  std::string student_id;
  std::string bank_code;
  std::string transaction_no;
  Paycode paycode = Paycode::Bill1;
  Idr amount;
  DeliveryChannel channel = DeliveryChannel::Atm;
  VasOutcome outcome = VasOutcome::Pending;

  // The bank holds the client's money for this entry.
  bool settled() const {
    return outcome == VasOutcome::Success || outcome == VasOutcome::ClearingAccepted;
  }

  friend bool operator==(const VasEntry&, const VasEntry&) = default;
};

class VasLedger {
 public:
  std::size_t add(VasEntry entry) {
    entries_.push_back(std::move(entry));
    return entries_.size() - 1;
  }
  VasEntry& at(std::size_t i) { return entries_.at(i); }
  const std::vector<VasEntry>& entries() const { return entries_; }
  Idr settled_total() const;

  // Tab-separated, one entry per line, with a header.
  std::string to_text() const;
  static VasLedger parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static VasLedger load(const std::filesystem::path& path);

  friend bool operator==(const VasLedger&, const VasLedger&) = default;

 private:
  std::vector<VasEntry> entries_;
};

}  // namespace tuition::sim
