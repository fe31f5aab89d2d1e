#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tuition {

enum class Semester : std::uint8_t { Regular1, Regular2, Short };

// Academic time: calendar year plus semester. Within a year the order is
// first regular, second regular, then the short semester.
struct AcademicPeriod {
  int year = 0;
  Semester semester = Semester::Regular1;

  friend constexpr auto operator<=>(const AcademicPeriod&, const AcademicPeriod&) = default;

  bool is_short() const { return semester == Semester::Short; }
  bool valid() const { return year >= 1990 && year <= 2100; }
  AcademicPeriod previous() const;
  AcademicPeriod next() const;
};

// "2010-1", "2010-2", "2010-S".
std::string to_string(const AcademicPeriod& period);
std::optional<AcademicPeriod> parse_period(std::string_view text);
// Semester column as it appears in ingestion files: "1", "2", "S".
std::string_view semester_code(Semester s);
std::optional<Semester> parse_semester(std::string_view text);

enum class DegreeLevel : std::uint8_t { S1, S2, S3 };
std::string_view to_string(DegreeLevel level);
std::optional<DegreeLevel> parse_degree(std::string_view text);

// Declaration order is the wire/report order of bill items.
enum class Paycode : std::uint8_t {
  DueBill,
  Bill1,
  Fine1,
  Bill2,
  Fine2,
  BillSS,
  FineSS,
  BillNS,
  TotalBill,
};
inline constexpr std::array<Paycode, 9> kAllPaycodes = {
    Paycode::DueBill, Paycode::Bill1,  Paycode::Fine1,  Paycode::Bill2,    Paycode::Fine2,
    Paycode::BillSS,  Paycode::FineSS, Paycode::BillNS, Paycode::TotalBill};
std::string_view to_string(Paycode code);
std::optional<Paycode> parse_paycode(std::string_view text);
bool is_fine(Paycode code);
// BILL-1 -> FINE-1, BILL-2 -> FINE-2, BILL-SS -> FINE-SS.
std::optional<Paycode> fine_for(Paycode bill);

enum class TariffId : std::uint8_t {
  RegistrationS1,
  RegistrationS2,
  RegistrationS3,
  DevelopmentS1,
  DevelopmentS2,
  DevelopmentS3,
  CreditS1,
  CreditS2,
  CreditS3,
};
inline constexpr std::array<TariffId, 9> kAllTariffIds = {
    TariffId::RegistrationS1, TariffId::RegistrationS2, TariffId::RegistrationS3,
    TariffId::DevelopmentS1,  TariffId::DevelopmentS2,  TariffId::DevelopmentS3,
    TariffId::CreditS1,       TariffId::CreditS2,       TariffId::CreditS3};
std::string_view to_string(TariffId id);
std::optional<TariffId> parse_tariff_id(std::string_view text);
TariffId registration_tariff(DegreeLevel level);
TariffId development_tariff(DegreeLevel level);
TariffId credit_tariff(DegreeLevel level);

enum class DeliveryChannel : std::uint8_t { Teller, Atm, Sms, Ebank, Clearing };
inline constexpr std::array<DeliveryChannel, 5> kAllChannels = {
    DeliveryChannel::Teller, DeliveryChannel::Atm, DeliveryChannel::Sms, DeliveryChannel::Ebank,
    DeliveryChannel::Clearing};
std::string_view to_string(DeliveryChannel channel);
std::optional<DeliveryChannel> parse_channel(std::string_view text);

enum class TransactionType : std::uint8_t { Payment, Reversal };
std::string_view to_string(TransactionType type);
std::optional<TransactionType> parse_transaction_type(std::string_view text);

enum class PaymentStatus : std::uint8_t { Success, WrongAmount, BillIsZero, WrongAccount };
std::string_view to_string(PaymentStatus status);
std::optional<PaymentStatus> parse_payment_status(std::string_view text);

enum class ReversalStatus : std::uint8_t { Success, Fail };
std::string_view to_string(ReversalStatus status);
std::optional<ReversalStatus> parse_reversal_status(std::string_view text);

// YES / NO as used by the academic data dictionary.
std::string_view yes_no(bool flag);
std::optional<bool> parse_yes_no(std::string_view text);

}  // namespace tuition
