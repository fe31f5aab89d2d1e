#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tuition/ledger.hpp"
#include "tuition/money.hpp"
#include "tuition/time.hpp"
#include "tuition/types.hpp"

// Line-oriented text codec for the messages exchanged between the bank's
// virtual account system and the payment engine.
//
//   BILLREQ|student|transaction_no|bank|datetime|channel|institution
//   BILLRESP|code|product|student|paycode:amount,paycode:amount,...
//   PAYMENT|PAYMENT|student|paycode|amount|IDR|bank|transaction_no|datetime|channel|institution
//   REVERSAL|REVERSAL|<same fields as PAYMENT>
//   PAYSTATUS|SUCCESS|WRONG_AMOUNT|BILL_IS_ZERO|WRONG_ACCOUNT
//   REVSTATUS|SUCCESS|FAIL
//
// Datetimes are YYYYMMDDHHMMSS. Field values never contain '|', ',' or ':'
// so nothing is escaped.
namespace tuition::protocol {

inline constexpr std::string_view kResponseOk = "00";
inline constexpr std::string_view kResponseUnknownStudent = "01";
inline constexpr std::string_view kProductCode = "360";
inline constexpr std::string_view kCurrency = "IDR";

struct BillRequest {
  std::string student_id;
  std::string transaction_no;
  std::string bank_code;
  Timestamp trans_datetime;
  DeliveryChannel del_channel = DeliveryChannel::Atm;
  std::string institution_code;

  friend bool operator==(const BillRequest&, const BillRequest&) = default;
};

struct BillItem {
  Paycode paycode = Paycode::Bill1;
  Idr amount;

  friend bool operator==(const BillItem&, const BillItem&) = default;
};

struct BillResponse {
  std::string response_code{kResponseOk};
  std::string product_code{kProductCode};
  std::string student_id;
  std::vector<BillItem> items;

  bool known() const { return response_code == kResponseOk; }

  friend bool operator==(const BillResponse&, const BillResponse&) = default;
};

// Payment and reversal share one layout; transaction_type tells them apart.
struct PaymentMessage {
  TransactionType transaction_type = TransactionType::Payment;
  std::string student_id;
  Paycode paycode = Paycode::Bill1;
  Idr amount;
  std::string ccy_code{kCurrency};
  std::string bank_code;
  std::string transaction_no;
  Timestamp trans_datetime;
  DeliveryChannel del_channel = DeliveryChannel::Atm;
  std::string institution_code;

  PaymentMessage as_reversal() const {
    PaymentMessage r = *this;
    r.transaction_type = TransactionType::Reversal;
    return r;
  }

  friend bool operator==(const PaymentMessage&, const PaymentMessage&) = default;
};

struct PaymentStatusMessage {
  PaymentStatus status = PaymentStatus::Success;
  friend bool operator==(const PaymentStatusMessage&, const PaymentStatusMessage&) = default;
};

struct ReversalStatusMessage {
  ReversalStatus status = ReversalStatus::Success;
  friend bool operator==(const ReversalStatusMessage&, const ReversalStatusMessage&) = default;
};

using WireMessage = std::variant<BillRequest, BillResponse, PaymentMessage, PaymentStatusMessage,
                                 ReversalStatusMessage>;

// Throws Error{InvalidField} when a field violates its invariants.
std::string encode(const WireMessage& message);

// Never throws anything but tuition::Error, whatever the input bytes.
// Codes: MalformedLine, UnknownKind, InvalidEnum, NonNumericAmount, InvalidField.
WireMessage decode(std::string_view line);

// Items in paycode order; unknown students get code "01" and no items.
BillResponse build_bill_response(const std::string& student_id,
                                 std::span<const ledger::Bill> unpaid_bills, bool known);

// True when `value` is usable as a wire field (non-empty, valid UTF-8, no
// delimiters or line breaks).
bool is_wire_safe(std::string_view value);

}  // namespace tuition::protocol
