#include "doctest.h"
#include "support/fixtures.hpp"
#include "tuition/protocol.hpp"

using namespace tuition;
using namespace tuition::protocol;
using namespace fixtures;

namespace {

ErrorCode decode_error(std::string_view line) {
  try {
    decode(line);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode accepted: " << line);
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("bill request encodes in dictionary order") {
  const BillRequest r{"2016730001", "TX0001", "014", make_timestamp(2010, 2, 15, 9, 30, 0), DeliveryChannel::Atm,
                      "UNPAR"};
  CHECK(encode(r) == "BILLREQ|2016730001|TX0001|014|20100215093000|ATM|UNPAR");
  CHECK(std::get<BillRequest>(decode(encode(r))) == r);
}

TEST_CASE("bill response encodes items as paycode:amount") {
  BillResponse r;
  r.student_id = "2016730001";
  r.items = {{Paycode::Bill1, Idr{2'500'000}}};
  CHECK(encode(r) == "BILLRESP|00|360|2016730001|BILL-1:2500000");
  r.items.push_back({Paycode::Fine1, Idr{100'000}});
  CHECK(encode(r) == "BILLRESP|00|360|2016730001|BILL-1:2500000,FINE-1:100000");
  CHECK(std::get<BillResponse>(decode(encode(r))) == r);

  BillResponse empty;
  empty.student_id = "X";
  CHECK(encode(empty) == "BILLRESP|00|360|X|");
  CHECK(std::get<BillResponse>(decode("BILLRESP|00|360|X|")) == empty);
}

TEST_CASE("payment line decodes field by field") {
  const auto m = decode("PAYMENT|PAYMENT|2016730001|BILL-1|2500000|IDR|014|TX0002|20100216100000|ATM|UNPAR");
  const auto& p = std::get<PaymentMessage>(m);
  CHECK(p.transaction_type == TransactionType::Payment);
  CHECK(p.student_id == "2016730001");
  CHECK(p.paycode == Paycode::Bill1);
  CHECK(p.amount == Idr{2'500'000});
  CHECK(p.ccy_code == "IDR");
  CHECK(p.bank_code == "014");
  CHECK(p.transaction_no == "TX0002");
  CHECK(p.trans_datetime == make_timestamp(2010, 2, 16, 10, 0, 0));
  CHECK(p.del_channel == DeliveryChannel::Atm);
  CHECK(p.institution_code == "UNPAR");
}

TEST_CASE("reversal and status lines round-trip") {
  const auto rev = payment("S1", Paycode::Bill2, 10, "TX9").as_reversal();
  CHECK(encode(rev).rfind("REVERSAL|REVERSAL|S1|BILL-2|10|IDR|", 0) == 0);
  CHECK(std::get<PaymentMessage>(decode(encode(rev))) == rev);
  for (const auto s : {PaymentStatus::Success, PaymentStatus::WrongAmount, PaymentStatus::BillIsZero,
                       PaymentStatus::WrongAccount}) {
    CHECK(std::get<PaymentStatusMessage>(decode(encode(PaymentStatusMessage{s}))).status == s);
  }
  CHECK(encode(ReversalStatusMessage{ReversalStatus::Fail}) == "REVSTATUS|FAIL");
  CHECK(encode(PaymentStatusMessage{PaymentStatus::BillIsZero}) == "PAYSTATUS|BILL_IS_ZERO");
}

TEST_CASE("decode errors are typed") {
  CHECK(decode_error("PAYMENT|PAYMENT|2016730001|BILL-9|2500000|IDR|014|TX0002|20100216100000|ATM|UNPAR") ==
        ErrorCode::InvalidEnum);
  CHECK(decode_error("PAYMENT|PAYMENT|2016730001|BILL-1|2500000|USD|014|TX0002|20100216100000|ATM|UNPAR") ==
        ErrorCode::InvalidEnum);
  CHECK(decode_error("PAYMENT|REVERSAL|2016730001|BILL-1|2500000|IDR|014|TX0002|20100216100000|ATM|UNPAR") ==
        ErrorCode::InvalidEnum);
  CHECK(decode_error("PAYMENT|PAYMENT|2016730001|BILL-1|25e5|IDR|014|TX0002|20100216100000|ATM|UNPAR") ==
        ErrorCode::NonNumericAmount);
  CHECK(decode_error("PAYMENT|PAYMENT|2016730001|BILL-1|0|IDR|014|TX0002|20100216100000|ATM|UNPAR") ==
        ErrorCode::InvalidField);
  CHECK(decode_error("PAYMENT|PAYMENT|2016730001|BILL-1|2500000|IDR|014") == ErrorCode::MalformedLine);
  CHECK(decode_error("BILLREQ|2016730001|TX0001|014|20100230093000|ATM|UNPAR") == ErrorCode::InvalidField);
  CHECK(decode_error("BILLREQ|2016730001|TX0001|014|20100215093000|FAX|UNPAR") == ErrorCode::InvalidEnum);
  CHECK(decode_error("HELLO|x") == ErrorCode::UnknownKind);
  CHECK(decode_error("") == ErrorCode::UnknownKind);
  CHECK(decode_error("BILLRESP|00|360|S|BILL-1") == ErrorCode::MalformedLine);
  CHECK(decode_error(std::string("BILLREQ|S\0|T|014|20100215093000|ATM|U", 35)) == ErrorCode::MalformedLine);
  CHECK(decode_error("BILLREQ|S\xff|T|014|20100215093000|ATM|U") == ErrorCode::MalformedLine);
}

TEST_CASE("encode refuses delimiter characters in fields") {
  for (const char* bad : {"A|B", "A,B", "A:B", "A\nB", ""}) {
    auto r = bill_request(bad);
    CHECK_THROWS_AS(encode(r), Error);
  }
  auto p = payment("S1", Paycode::Bill1, 0, "T");
  CHECK_THROWS_AS(encode(p), Error);
  p.amount = Idr{1};
  p.ccy_code = "USD";
  CHECK_THROWS_AS(encode(p), Error);
}

TEST_CASE("bill response lists unpaid bills in paycode order") {
  ledger::Bill fine{kP1, "S1", Paycode::Fine1, Idr{100'000}, t0(), t0()};
  ledger::Bill b1{kP1, "S1", Paycode::Bill1, Idr{2'500'000}, t0(), t0()};
  const std::vector<ledger::Bill> bills = {fine, b1};
  const auto r = build_bill_response("S1", bills, true);
  CHECK(r.response_code == "00");
  REQUIRE(r.items.size() == 2);
  CHECK(r.items[0] == BillItem{Paycode::Bill1, Idr{2'500'000}});
  CHECK(r.items[1] == BillItem{Paycode::Fine1, Idr{100'000}});

  CHECK(build_bill_response("S1", {}, true).items.empty());
  const auto unknown = build_bill_response("S9", {}, false);
  CHECK(unknown.response_code == "01");
  CHECK(unknown.items.empty());
}

TEST_CASE("equal messages encode identically") {
  const auto a = payment("S1", Paycode::Bill1, 5, "T");
  const auto b = payment("S1", Paycode::Bill1, 5, "T");
  CHECK(encode(a) == encode(b));
}
