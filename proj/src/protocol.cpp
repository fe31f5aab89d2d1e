#include "tuition/protocol.hpp"

#include <algorithm>
#include <charconv>

#include "tuition/error.hpp"

namespace tuition::protocol {

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

void require_field(std::string_view name, std::string_view value) {
  if (!is_wire_safe(value)) {
    throw Error(ErrorCode::InvalidField, std::string(name) + " is empty or holds a reserved byte");
  }
}

void require_datetime(std::string_view name, Timestamp t) {
  if (!t.whole_seconds() || !parse_datetime(format_datetime(t))) {
    throw Error(ErrorCode::InvalidField, std::string(name) + " is not a whole-second datetime");
  }
}

void require_code(std::string_view name, std::string_view value, std::size_t width) {
  require_field(name, value);
  if (value.size() != width) {
    throw Error(ErrorCode::InvalidField,
                std::string(name) + " must be " + std::to_string(width) + " characters");
  }
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view field(std::string_view name, std::string_view value) {
  require_field(name, value);
  return value;
}

Idr parse_amount(std::string_view name, std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::NonNumericAmount, std::string(name) + " is empty");
  if (!std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(ErrorCode::NonNumericAmount, std::string(name) + " is not a decimal integer");
  }
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::NonNumericAmount, std::string(name) + " out of range");
  }
  return Idr{value};
}

Timestamp parse_time_field(std::string_view name, std::string_view text) {
  const auto t = parse_datetime(text);
  if (!t) throw Error(ErrorCode::InvalidField, std::string(name) + " is not YYYYMMDDHHMMSS");
  return *t;
}

template <typename T>
T parse_enum(std::string_view name, std::optional<T> parsed) {
  if (!parsed) throw Error(ErrorCode::InvalidEnum, "unknown " + std::string(name));
  return *parsed;
}

void expect_fields(const std::vector<std::string_view>& f, std::size_t n) {
  if (f.size() != n) {
    throw Error(ErrorCode::MalformedLine, std::string(f[0].substr(0, 16)) + " expects " +
                                              std::to_string(n - 1) + " fields, got " +
                                              std::to_string(f.size() - 1));
  }
}

void validate(const PaymentMessage& m) {
  require_field("student_id", m.student_id);
  if (m.amount <= Idr{0}) throw Error(ErrorCode::InvalidField, "amount must be positive");
  if (m.ccy_code != kCurrency) throw Error(ErrorCode::InvalidField, "currency must be IDR");
  require_field("bank_code", m.bank_code);
  require_field("transaction_no", m.transaction_no);
  require_datetime("trans_datetime", m.trans_datetime);
  require_field("institution_code", m.institution_code);
}

struct Encoder {
  std::string operator()(const BillRequest& m) const {
    require_field("student_id", m.student_id);
    require_field("transaction_no", m.transaction_no);
    require_field("bank_code", m.bank_code);
    require_datetime("trans_datetime", m.trans_datetime);
    require_field("institution_code", m.institution_code);
    std::string out = "BILLREQ|";
    out += m.student_id + "|" + m.transaction_no + "|" + m.bank_code + "|" +
           format_datetime(m.trans_datetime) + "|" + std::string(to_string(m.del_channel)) + "|" +
           m.institution_code;
    return out;
  }

  std::string operator()(const BillResponse& m) const {
    require_code("response_code", m.response_code, 2);
    require_code("product_code", m.product_code, 3);
    require_field("student_id", m.student_id);
    std::string out = "BILLRESP|" + m.response_code + "|" + m.product_code + "|" + m.student_id + "|";
    for (std::size_t i = 0; i < m.items.size(); ++i) {
      if (m.items[i].amount.is_negative()) {
        throw Error(ErrorCode::InvalidField, "negative bill item amount");
      }
      if (i) out += ',';
      out += std::string(to_string(m.items[i].paycode)) + ":" + m.items[i].amount.to_string();
    }
    return out;
  }

  std::string operator()(const PaymentMessage& m) const {
    validate(m);
    const std::string type{to_string(m.transaction_type)};
    std::string out = type + "|" + type + "|" + m.student_id + "|" +
                      std::string(to_string(m.paycode)) + "|" + m.amount.to_string() + "|" +
                      m.ccy_code + "|" + m.bank_code + "|" + m.transaction_no + "|" +
                      format_datetime(m.trans_datetime) + "|" +
                      std::string(to_string(m.del_channel)) + "|" + m.institution_code;
    return out;
  }

  std::string operator()(const PaymentStatusMessage& m) const {
    return "PAYSTATUS|" + std::string(to_string(m.status));
  }

  std::string operator()(const ReversalStatusMessage& m) const {
    return "REVSTATUS|" + std::string(to_string(m.status));
  }
};

BillItem decode_item(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::MalformedLine, "bill item lacks ':'");
  }
  BillItem item;
  item.paycode = parse_enum("paycode", parse_paycode(text.substr(0, colon)));
  item.amount = parse_amount("item amount", text.substr(colon + 1));
  return item;
}

PaymentMessage decode_payment(const std::vector<std::string_view>& f, TransactionType kind) {
  expect_fields(f, 11);
  PaymentMessage m;
  m.transaction_type = parse_enum("transaction_type", parse_transaction_type(f[1]));
  if (m.transaction_type != kind) {
    throw Error(ErrorCode::InvalidEnum, "transaction_type does not match message kind");
  }
  m.student_id = field("student_id", f[2]);
  m.paycode = parse_enum("paycode", parse_paycode(f[3]));
  m.amount = parse_amount("amount", f[4]);
  if (f[5] != kCurrency) throw Error(ErrorCode::InvalidEnum, "unsupported currency");
  m.ccy_code = f[5];
  m.bank_code = field("bank_code", f[6]);
  m.transaction_no = field("transaction_no", f[7]);
  m.trans_datetime = parse_time_field("trans_datetime", f[8]);
  m.del_channel = parse_enum("del_channel", parse_channel(f[9]));
  m.institution_code = field("institution_code", f[10]);
  if (m.amount <= Idr{0}) throw Error(ErrorCode::InvalidField, "amount must be positive");
  return m;
}

}  // namespace

bool is_wire_safe(std::string_view value) {
  if (value.empty()) return false;
  for (char c : value) {
    if (c == '|' || c == ',' || c == ':' || c == '\n' || c == '\r' || c == '\0') return false;
  }
  return valid_utf8(value);
}

std::string encode(const WireMessage& message) { return std::visit(Encoder{}, message); }

WireMessage decode(std::string_view line) {
  if (line.find_first_of("\n\r") != std::string_view::npos || line.find('\0') != std::string_view::npos) {
    throw Error(ErrorCode::MalformedLine, "embedded line break or NUL");
  }
  if (!valid_utf8(line)) throw Error(ErrorCode::MalformedLine, "line is not valid UTF-8");
  const auto f = split(line, '|');
  const std::string_view kind = f[0];

  if (kind == "BILLREQ") {
    expect_fields(f, 7);
    BillRequest m;
    m.student_id = field("student_id", f[1]);
    m.transaction_no = field("transaction_no", f[2]);
    m.bank_code = field("bank_code", f[3]);
    m.trans_datetime = parse_time_field("trans_datetime", f[4]);
    m.del_channel = parse_enum("del_channel", parse_channel(f[5]));
    m.institution_code = field("institution_code", f[6]);
    return m;
  }
  if (kind == "BILLRESP") {
    expect_fields(f, 5);
    BillResponse m;
    m.response_code = field("response_code", f[1]);
    m.product_code = field("product_code", f[2]);
    if (m.response_code.size() != 2 || m.product_code.size() != 3) {
      throw Error(ErrorCode::InvalidField, "bad response or product code width");
    }
    m.student_id = field("student_id", f[3]);
    if (!f[4].empty()) {
      for (auto item : split(f[4], ',')) m.items.push_back(decode_item(item));
    }
    return m;
  }
  if (kind == "PAYMENT") return decode_payment(f, TransactionType::Payment);
  if (kind == "REVERSAL") return decode_payment(f, TransactionType::Reversal);
  if (kind == "PAYSTATUS") {
    expect_fields(f, 2);
    return PaymentStatusMessage{parse_enum("payment status", parse_payment_status(f[1]))};
  }
  if (kind == "REVSTATUS") {
    expect_fields(f, 2);
    return ReversalStatusMessage{parse_enum("reversal status", parse_reversal_status(f[1]))};
  }
  throw Error(ErrorCode::UnknownKind, "unknown message kind");
}

BillResponse build_bill_response(const std::string& student_id,
                                 std::span<const ledger::Bill> unpaid_bills, bool known) {
  BillResponse response;
  response.student_id = student_id;
  if (!known) {
    response.response_code = std::string(kResponseUnknownStudent);
    return response;
  }
  std::vector<const ledger::Bill*> sorted;
  for (const auto& bill : unpaid_bills) {
    if (bill.outstanding() && bill.student_id == student_id) sorted.push_back(&bill);
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const ledger::Bill* a, const ledger::Bill* b) {
    return std::tie(a->paycode, a->period) < std::tie(b->paycode, b->period);
  });
  for (const auto* bill : sorted) response.items.push_back({bill->paycode, bill->amount});
  return response;
}

}  // namespace tuition::protocol
