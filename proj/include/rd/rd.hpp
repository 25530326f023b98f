#pragma once

#include "rd/canonical.hpp"
#include "rd/characters.hpp"
#include "rd/combat.hpp"
#include "rd/error.hpp"
#include "rd/games.hpp"
#include "rd/genesis.hpp"
#include "rd/harness.hpp"
#include "rd/ledger.hpp"
#include "rd/rhythm.hpp"
#include "rd/rng.hpp"
#include "rd/transaction.hpp"
