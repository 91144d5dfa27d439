#pragma once

#include <array>
#include <string_view>

namespace conjunctive {

// Fixture: twenty remote-agent role descriptions. Episode pools are sampled
// from this list. The contents are illustrative, not taken from any dataset.
inline constexpr std::array<std::string_view, 20> kRolePool = {
    "Account Agent: looks up balances, rewards and profile data",
    "Flight Agent: searches and compares flight itineraries",
    "Hotel Agent: finds and books accommodation",
    "Car Rental Agent: quotes and reserves rental vehicles",
    "Weather Agent: reports forecasts for travel destinations",
    "Currency Agent: converts prices between currencies",
    "Calendar Agent: schedules events and reminders",
    "Restaurant Agent: recommends dining options",
    "Visa Agent: summarizes entry requirements",
    "Insurance Agent: compares travel insurance plans",
    "Translation Agent: translates short phrases",
    "Billing Agent: explains invoices and charges",
    "Loyalty Agent: tracks membership tiers and points",
    "Support Agent: answers general help-desk questions",
    "Maps Agent: computes routes and travel times",
    "Events Agent: lists concerts and local events",
    "Document Agent: summarizes uploaded documents",
    "Shopping Agent: compares product offers",
    "Health Agent: lists nearby pharmacies and clinics",
    "Notification Agent: drafts status notifications",
};

}  // namespace conjunctive
