#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "palign/errors.hpp"

namespace palign {

// Stable integer codes for serialization: Train=0, Swissmetro=1, Car=2.
enum class Alternative : int { Train = 0, Swissmetro = 1, Car = 2 };

inline constexpr std::array<Alternative, 3> kAlternatives = {
    Alternative::Train, Alternative::Swissmetro, Alternative::Car};

enum class Gender : int { Female = 0, Male = 1 };
enum class AgeBand : int { Under25 = 0, From25To39, From40To54, From55To65, Over65 };
enum class IncomeBand : int { Under50k = 0, From50kTo100k, Over100k };
enum class UserGroup : int { TrainUser = 0, CarUser = 1 };

enum class Purpose : int {
  Commute = 0,
  Shopping,
  Business,
  Leisure,
  ReturnFromWork,
  ReturnFromShopping,
  ReturnFromBusiness,
  ReturnFromLeisure,
};

enum class Payer : int { Self = 0, Half, Employer };
enum class Luggage : int { None = 0, One, Several };

namespace detail {

template <typename E, std::size_t N>
inline E enum_from_string(const std::array<std::string_view, N>& names,
                          std::string_view s, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw DataError("unknown " + std::string(what) + " value: '" + std::string(s) + "'");
}

}  // namespace detail

inline constexpr std::array<std::string_view, 3> kAlternativeNames = {
    "train", "swissmetro", "car"};
inline constexpr std::array<std::string_view, 2> kGenderNames = {"female", "male"};
inline constexpr std::array<std::string_view, 5> kAgeBandNames = {
    "<25", "25-39", "40-54", "55-65", ">65"};
inline constexpr std::array<std::string_view, 3> kIncomeBandNames = {
    "<50k", "50-100k", ">100k"};
inline constexpr std::array<std::string_view, 2> kUserGroupNames = {
    "train_user", "car_user"};
inline constexpr std::array<std::string_view, 8> kPurposeNames = {
    "commute",          "shopping",        "business",
    "leisure",          "return_work",     "return_shopping",
    "return_business",  "return_leisure"};
inline constexpr std::array<std::string_view, 3> kPayerNames = {"self", "half", "employer"};
inline constexpr std::array<std::string_view, 3> kLuggageNames = {"none", "one", "several"};

inline std::string_view to_string(Alternative a) { return kAlternativeNames[static_cast<std::size_t>(a)]; }
inline std::string_view to_string(Gender g) { return kGenderNames[static_cast<std::size_t>(g)]; }
inline std::string_view to_string(AgeBand a) { return kAgeBandNames[static_cast<std::size_t>(a)]; }
inline std::string_view to_string(IncomeBand i) { return kIncomeBandNames[static_cast<std::size_t>(i)]; }
inline std::string_view to_string(UserGroup u) { return kUserGroupNames[static_cast<std::size_t>(u)]; }
inline std::string_view to_string(Purpose p) { return kPurposeNames[static_cast<std::size_t>(p)]; }
inline std::string_view to_string(Payer p) { return kPayerNames[static_cast<std::size_t>(p)]; }
inline std::string_view to_string(Luggage l) { return kLuggageNames[static_cast<std::size_t>(l)]; }

inline Alternative alternative_from_string(std::string_view s) {
  return detail::enum_from_string<Alternative>(kAlternativeNames, s, "alternative");
}
inline Gender gender_from_string(std::string_view s) {
  return detail::enum_from_string<Gender>(kGenderNames, s, "gender");
}
inline AgeBand age_band_from_string(std::string_view s) {
  return detail::enum_from_string<AgeBand>(kAgeBandNames, s, "age_band");
}
inline IncomeBand income_band_from_string(std::string_view s) {
  return detail::enum_from_string<IncomeBand>(kIncomeBandNames, s, "income_band");
}
inline UserGroup user_group_from_string(std::string_view s) {
  return detail::enum_from_string<UserGroup>(kUserGroupNames, s, "user_group");
}
inline Purpose purpose_from_string(std::string_view s) {
  return detail::enum_from_string<Purpose>(kPurposeNames, s, "purpose");
}
inline Payer payer_from_string(std::string_view s) {
  return detail::enum_from_string<Payer>(kPayerNames, s, "who_pays");
}
inline Luggage luggage_from_string(std::string_view s) {
  return detail::enum_from_string<Luggage>(kLuggageNames, s, "luggage");
}

struct SocioDemographics {
  Gender gender = Gender::Female;
  AgeBand age_band = AgeBand::Under25;
  IncomeBand income_band = IncomeBand::Under50k;
  UserGroup user_group = UserGroup::TrainUser;

  bool operator==(const SocioDemographics&) const = default;
  auto operator<=>(const SocioDemographics&) const = default;

  // Category index of embedding dimension m (0=gender, 1=age, 2=income, 3=group).
  std::size_t category(std::size_t dim) const {
    switch (dim) {
      case 0: return static_cast<std::size_t>(gender);
      case 1: return static_cast<std::size_t>(age_band);
      case 2: return static_cast<std::size_t>(income_band);
      case 3: return static_cast<std::size_t>(user_group);
      default: throw DataError("demographic dimension out of range");
    }
  }
};

inline constexpr std::array<std::size_t, 4> kDemographicCardinalities = {2, 5, 3, 2};
inline constexpr std::array<std::string_view, 4> kDemographicVariables = {
    "gender", "age", "income", "group"};

inline std::string_view demographic_category_name(std::size_t dim, std::size_t category) {
  switch (dim) {
    case 0: return kGenderNames[category];
    case 1: return kAgeBandNames[category];
    case 2: return kIncomeBandNames[category];
    case 3: return kUserGroupNames[category];
    default: throw DataError("demographic dimension out of range");
  }
}

// All 60 distinct profiles, in lexicographic category order.
inline std::vector<SocioDemographics> all_profiles() {
  std::vector<SocioDemographics> out;
  out.reserve(60);
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t u = 0; u < 2; ++u)
          out.push_back({static_cast<Gender>(g), static_cast<AgeBand>(a),
                         static_cast<IncomeBand>(i), static_cast<UserGroup>(u)});
  return out;
}

struct ModeAttributes {
  double cost = 0.0;         // CHF
  double travel_time = 0.0;  // minutes
  double headway = 0.0;      // minutes

  bool operator==(const ModeAttributes&) const = default;
};

struct ChoiceContext {
  Purpose purpose = Purpose::Commute;
  bool first_class = false;
  Payer who_pays = Payer::Self;
  Luggage luggage = Luggage::None;
  bool annual_pass = false;
  ModeAttributes train;
  ModeAttributes swissmetro;
  ModeAttributes car;  // car.headway == 0 always

  bool operator==(const ChoiceContext&) const = default;

  const ModeAttributes& attributes(Alternative a) const {
    switch (a) {
      case Alternative::Train: return train;
      case Alternative::Swissmetro: return swissmetro;
      case Alternative::Car: return car;
    }
    throw DataError("invalid alternative");
  }

  void validate() const {
    if (car.headway != 0.0) throw DataError("car headway must be 0");
    for (auto a : kAlternatives) {
      const auto& m = attributes(a);
      for (double v : {m.cost, m.travel_time, m.headway}) {
        if (!std::isfinite(v) || v < 0.0) {
          throw DataError("mode attributes must be finite and non-negative");
        }
      }
    }
  }
};

struct ChoiceRecord {
  std::string respondent_id;
  SocioDemographics demographics;
  ChoiceContext context;
  Alternative chosen = Alternative::Train;

  bool operator==(const ChoiceRecord&) const = default;
};

struct RespondentPanel {
  std::string respondent_id;
  SocioDemographics demographics;
  std::vector<std::pair<ChoiceContext, Alternative>> observations;

  bool operator==(const RespondentPanel&) const = default;
};

struct DatasetBundle {
  std::vector<RespondentPanel> detailed;  // D_h
  std::vector<ChoiceRecord> general;      // D_l
  std::vector<ChoiceRecord> test;         // D_t
  std::uint64_t split_seed = 0;

  bool operator==(const DatasetBundle&) const = default;
};

inline std::vector<ChoiceRecord> flatten(const std::vector<RespondentPanel>& panels) {
  std::vector<ChoiceRecord> out;
  for (const auto& p : panels) {
    for (const auto& [ctx, chosen] : p.observations) {
      out.push_back({p.respondent_id, p.demographics, ctx, chosen});
    }
  }
  return out;
}

}  // namespace palign
