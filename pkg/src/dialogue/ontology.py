"""Movie-ticket dialogue schema constants."""

# Intents
INTENT_REQUEST = "request"
INTENT_INFORM = "inform"
INTENT_DENY = "deny"
INTENT_CONFIRM_QUESTION = "confirm_question"
INTENT_CONFIRM_ANSWER = "confirm_answer"
INTENT_GREETING = "greeting"
INTENT_CLOSING = "closing"
INTENT_NOT_SURE = "not_sure"
INTENT_MULTIPLE_CHOICE = "multiple_choice"
INTENT_THANKS = "thanks"
INTENT_WELCOME = "welcome"

INTENTS = (
    INTENT_REQUEST,
    INTENT_INFORM,
    INTENT_DENY,
    INTENT_CONFIRM_QUESTION,
    INTENT_CONFIRM_ANSWER,
    INTENT_GREETING,
    INTENT_CLOSING,
    INTENT_NOT_SURE,
    INTENT_MULTIPLE_CHOICE,
    INTENT_THANKS,
    INTENT_WELCOME,
)

# Slots
SLOT_CITY = "city"
SLOT_CLOSING = "closing"
SLOT_DATE = "date"
SLOT_DISTANCE = "distanceconstraints"
SLOT_GREETING = "greeting"
SLOT_MOVIENAME = "moviename"
SLOT_NUMBER_OF_PEOPLE = "numberofpeople"
SLOT_PRICE = "price"
SLOT_STARTTIME = "starttime"
SLOT_STATE = "state"
SLOT_TASKCOMPLETE = "taskcomplete"
SLOT_THEATER = "theater"
SLOT_THEATER_CHAIN = "theater_chain"
SLOT_TICKET = "ticket"
SLOT_VIDEO_FORMAT = "video_format"
SLOT_ZIP = "zip"

SLOTS = (
    SLOT_CITY,
    SLOT_CLOSING,
    SLOT_DATE,
    SLOT_DISTANCE,
    SLOT_GREETING,
    SLOT_MOVIENAME,
    SLOT_NUMBER_OF_PEOPLE,
    SLOT_PRICE,
    SLOT_STARTTIME,
    SLOT_STATE,
    SLOT_TASKCOMPLETE,
    SLOT_THEATER,
    SLOT_THEATER_CHAIN,
    SLOT_TICKET,
    SLOT_VIDEO_FORMAT,
    SLOT_ZIP,
)

# Bit i of a goal category id marks OPTIONAL_CONSTRAINT_SLOTS[i] as present.
OPTIONAL_CONSTRAINT_SLOTS = (
    SLOT_CITY,
    SLOT_DATE,
    SLOT_THEATER,
    SLOT_NUMBER_OF_PEOPLE,
    SLOT_STARTTIME,
    SLOT_VIDEO_FORMAT,
    SLOT_THEATER_CHAIN,
)
NUM_CATEGORIES = 2 ** len(OPTIONAL_CONSTRAINT_SLOTS)

# Agent request templates, in rule-agent order.
GOAL_RELEVANT_SLOTS = (SLOT_MOVIENAME,) + OPTIONAL_CONSTRAINT_SLOTS

# Knowledge-base columns; the agent can inform any of them.
INFORMABLE_SLOTS = GOAL_RELEVANT_SLOTS + (
    SLOT_PRICE,
    SLOT_STATE,
    SLOT_ZIP,
    SLOT_DISTANCE,
)

# Slots a user may ask for besides the ticket itself.
REQUESTABLE_EXTRAS = (SLOT_PRICE, SLOT_ZIP, SLOT_STATE, SLOT_DISTANCE)

UNKNOWN = "UNK"
NO_TICKET = "none"

MAX_TURNS = 40
TURN_PENALTY = -1.0

EVENT_NONTERMINAL = "nonterminal_turn"
EVENT_SUCCESS = "success"
EVENT_FAILURE = "failure"

STATUS_SUCCESS = "success"
STATUS_FAILURE = "failure"

SOURCE_REAL = "real"
SOURCE_SIMULATED = "simulated"
