#include "tuition/types.hpp"

#include <charconv>

#include "tuition/error.hpp"

namespace tuition {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view text, const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 9> kPaycodeNames = {
    "DUE-BILL", "BILL-1", "FINE-1", "BILL-2", "FINE-2", "BILL-SS", "FINE-SS", "BILL-NS", "TOTAL-BILL"};
constexpr std::array<std::string_view, 9> kTariffNames = {
    "REGISTRATION_S1", "REGISTRATION_S2", "REGISTRATION_S3", "DEVELOPMENT_S1", "DEVELOPMENT_S2",
    "DEVELOPMENT_S3",  "CREDIT_S1",       "CREDIT_S2",       "CREDIT_S3"};
constexpr std::array<std::string_view, 5> kChannelNames = {"TELLER", "ATM", "SMS", "EBANK",
                                                           "CLEARING"};
constexpr std::array<std::string_view, 3> kDegreeNames = {"S1", "S2", "S3"};
constexpr std::array<std::string_view, 3> kSemesterCodes = {"1", "2", "S"};
constexpr std::array<std::string_view, 2> kTransactionTypes = {"PAYMENT", "REVERSAL"};
constexpr std::array<std::string_view, 4> kPaymentStatuses = {"SUCCESS", "WRONG_AMOUNT",
                                                              "BILL_IS_ZERO", "WRONG_ACCOUNT"};
constexpr std::array<std::string_view, 2> kReversalStatuses = {"SUCCESS", "FAIL"};

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingTariff: return "MissingTariff";
    case ErrorCode::ForeignRegistration: return "ForeignRegistration";
    case ErrorCode::WrongSemester: return "WrongSemester";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::InvalidEnum: return "InvalidEnum";
    case ErrorCode::NonNumericAmount: return "NonNumericAmount";
    case ErrorCode::EngineNotReady: return "EngineNotReady";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::MissingAcademicData: return "MissingAcademicData";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::DuplicateTransaction: return "DuplicateTransaction";
    case ErrorCode::BillNotFound: return "BillNotFound";
    case ErrorCode::BillAlreadyPaid: return "BillAlreadyPaid";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NoBillAvailable: return "NoBillAvailable";
    case ErrorCode::ChannelTimeout: return "ChannelTimeout";
  }
  return "Unknown";
}

namespace {
std::string join_diagnostics(const std::vector<std::string>& diagnostics) {
  std::string out = std::to_string(diagnostics.size()) + " invalid record(s)";
  for (const auto& d : diagnostics) out += "\n  " + d;
  return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> diagnostics)
    : Error(ErrorCode::ValidationError, join_diagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

AcademicPeriod AcademicPeriod::previous() const {
  switch (semester) {
    case Semester::Regular1: return {year - 1, Semester::Short};
    case Semester::Regular2: return {year, Semester::Regular1};
    case Semester::Short: return {year, Semester::Regular2};
  }
  return *this;
}

AcademicPeriod AcademicPeriod::next() const {
  switch (semester) {
    case Semester::Regular1: return {year, Semester::Regular2};
    case Semester::Regular2: return {year, Semester::Short};
    case Semester::Short: return {year + 1, Semester::Regular1};
  }
  return *this;
}

std::string_view semester_code(Semester s) { return kSemesterCodes[static_cast<std::size_t>(s)]; }

std::optional<Semester> parse_semester(std::string_view text) {
  return lookup<Semester>(text, kSemesterCodes);
}

std::string to_string(const AcademicPeriod& period) {
  return std::to_string(period.year) + "-" + std::string(semester_code(period.semester));
}

std::optional<AcademicPeriod> parse_period(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash != 4) return std::nullopt;
  int year = 0;
  const auto year_text = text.substr(0, dash);
  auto [ptr, ec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), year);
  if (ec != std::errc() || ptr != year_text.data() + year_text.size()) return std::nullopt;
  const auto sem = parse_semester(text.substr(dash + 1));
  if (!sem) return std::nullopt;
  AcademicPeriod period{year, *sem};
  if (!period.valid()) return std::nullopt;
  return period;
}

std::string_view to_string(DegreeLevel level) { return kDegreeNames[static_cast<std::size_t>(level)]; }
std::optional<DegreeLevel> parse_degree(std::string_view text) {
  return lookup<DegreeLevel>(text, kDegreeNames);
}

std::string_view to_string(Paycode code) { return kPaycodeNames[static_cast<std::size_t>(code)]; }
std::optional<Paycode> parse_paycode(std::string_view text) {
  return lookup<Paycode>(text, kPaycodeNames);
}

bool is_fine(Paycode code) {
  return code == Paycode::Fine1 || code == Paycode::Fine2 || code == Paycode::FineSS;
}

std::optional<Paycode> fine_for(Paycode bill) {
  switch (bill) {
    case Paycode::Bill1: return Paycode::Fine1;
    case Paycode::Bill2: return Paycode::Fine2;
    case Paycode::BillSS: return Paycode::FineSS;
    default: return std::nullopt;
  }
}

std::string_view to_string(TariffId id) { return kTariffNames[static_cast<std::size_t>(id)]; }
std::optional<TariffId> parse_tariff_id(std::string_view text) {
  return lookup<TariffId>(text, kTariffNames);
}

TariffId registration_tariff(DegreeLevel level) {
  return static_cast<TariffId>(static_cast<int>(TariffId::RegistrationS1) + static_cast<int>(level));
}
TariffId development_tariff(DegreeLevel level) {
  return static_cast<TariffId>(static_cast<int>(TariffId::DevelopmentS1) + static_cast<int>(level));
}
TariffId credit_tariff(DegreeLevel level) {
  return static_cast<TariffId>(static_cast<int>(TariffId::CreditS1) + static_cast<int>(level));
}

std::string_view to_string(DeliveryChannel channel) {
  return kChannelNames[static_cast<std::size_t>(channel)];
}
std::optional<DeliveryChannel> parse_channel(std::string_view text) {
  return lookup<DeliveryChannel>(text, kChannelNames);
}

std::string_view to_string(TransactionType type) {
  return kTransactionTypes[static_cast<std::size_t>(type)];
}
std::optional<TransactionType> parse_transaction_type(std::string_view text) {
  return lookup<TransactionType>(text, kTransactionTypes);
}

std::string_view to_string(PaymentStatus status) {
  return kPaymentStatuses[static_cast<std::size_t>(status)];
}
std::optional<PaymentStatus> parse_payment_status(std::string_view text) {
  return lookup<PaymentStatus>(text, kPaymentStatuses);
}

std::string_view to_string(ReversalStatus status) {
  return kReversalStatuses[static_cast<std::size_t>(status)];
}
std::optional<ReversalStatus> parse_reversal_status(std::string_view text) {
  return lookup<ReversalStatus>(text, kReversalStatuses);
}

std::string_view yes_no(bool flag) { return flag ? "YES" : "NO"; }
std::optional<bool> parse_yes_no(std::string_view text) {
  if (text == "YES") return true;
  if (text == "NO") return false;
  return std::nullopt;
}

}  // namespace tuition
