#pragma once

#include "agentrag/audit.hpp"
#include "agentrag/clients.hpp"
#include "agentrag/commands.hpp"
#include "agentrag/config.hpp"
#include "agentrag/error.hpp"
#include "agentrag/harness.hpp"
#include "agentrag/http_clients.hpp"
#include "agentrag/mock_clients.hpp"
#include "agentrag/parallel.hpp"
#include "agentrag/prompts.hpp"
#include "agentrag/qa_metrics.hpp"
#include "agentrag/records.hpp"
#include "agentrag/reward.hpp"
#include "agentrag/reward_service.hpp"
#include "agentrag/strings.hpp"
#include "agentrag/trajectory.hpp"
