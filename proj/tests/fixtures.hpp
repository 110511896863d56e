#pragma once

// Worked examples with published metric values, used as regression fixtures.

#include <string>
#include <vector>

#include "raqeval/record.hpp"

namespace fixtures {

inline const std::string kOneDirectionResponse = "One Direction are from London, England";
inline const std::string kOneDirectionReference = "London, England";

inline const std::string kArsNovaResponse =
    "The composer and lyricist for the musical Big Fish, Andrew Lippa, is a residential artist at the Ars Nova "
    "Theater in New York City.";
inline const std::string kArsNovaReference = "Ars Nova Theater";

inline const std::string kWatergateResponse =
    "The Watergate scandal was a political scandal in the United States involving the administration of U.S. "
    "President Richard Nixon from 1972 to 1974 that led to Nixon's resignation.";
inline const std::string kWatergateReference =
    "It was an array of clandestine and often illegal activities undertaken by members of the Nixon administration.";

inline const std::string kNortheastResponse =
    "The states in the northeast region include Maine, New York, New Jersey, Vermont, Massachusetts, Rhode Island, "
    "Connecticut, New Hampshire, and Pennsylvania.";
inline const std::vector<std::string> kNortheastReferences = {
    "New Hampshire", "Maine", "Rhode Island", "Pennsylvania", "Vermont",
    "New York",      "Connecticut", "New Jersey", "Massachusetts"};

inline const std::string kDocumentaryResponse =
    "Pond Hockey delves into fiscal issues. I.O.U.S.A. focuses on the shape and impact of the United States national "
    "debt.";

// Elided passage text restored to the sentences that are shown.
inline const std::vector<raqeval::Passage> kDocumentaryKnowledge = {
    {1, "Pond Hockey (film)", "The film is an examination of the changing culture of pond hockey.", false},
    {2, "I.O.U.S.A.",
     "I.O.U.S.A. is a 2008 American documentary film directed by Patrick Creadon. The film focuses on the shape and "
     "impact of the United States national debt and was known as the \"Fiscal Wake-Up Tour.\"",
     true},
};

inline const std::string kPencilResponse = "1835";
inline const std::vector<raqeval::Passage> kPencilKnowledge = {
    {1, "Pencil",
     "many people have the misconception that the graphite in the pencil is lead, even though it never contained the "
     "element lead.",
     true},
};

}  // namespace fixtures
