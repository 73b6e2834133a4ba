"""Bundled word lists used by the templates.

Street and business names deliberately avoid ordinal and spatial words
("first", "last", "top", ...) so they never trip the ordinal rules.
"""

FIRST_NAMES = (
    "john", "jane", "maria", "david", "sarah", "michael", "emma", "james", "olivia", "daniel",
    "sophia", "robert", "mia", "william", "ava", "joseph", "isabella", "thomas", "amelia", "charles",
    "harper", "henry", "evelyn", "jack", "abigail", "lucas", "emily", "noah", "ella", "liam",
    "grace", "ethan", "chloe", "mason", "lily", "logan", "zoe", "oliver", "nora", "elijah",
    "hannah", "aiden", "leah", "samuel", "aria", "benjamin", "ruby", "carter", "alice", "owen",
    "priya", "arjun", "wei", "mei", "kenji", "yuki", "omar", "fatima", "carlos", "lucia",
    "diego", "sofia", "ivan", "anya", "pierre", "claire", "hans", "greta", "ahmed", "layla",
    "raj", "anika", "tomas", "elena", "marco", "giulia", "sean", "niamh", "kofi", "amara",
)

LAST_NAMES = (
    "smith", "johnson", "williams", "brown", "jones", "garcia", "miller", "davis", "rodriguez", "martinez",
    "hernandez", "lopez", "gonzalez", "wilson", "anderson", "taylor", "moore", "jackson", "martin", "lee",
    "perez", "thompson", "white", "harris", "sanchez", "clark", "ramirez", "lewis", "robinson", "walker",
    "young", "allen", "king", "wright", "scott", "torres", "nguyen", "hill", "flores", "green",
    "adams", "nelson", "baker", "hall", "rivera", "campbell", "mitchell", "carter", "roberts", "cooper",
    "patel", "kim", "chen", "singh", "tanaka", "silva", "novak", "muller", "rossi", "okafor",
)

STREET_NAMES = (
    "homestead", "maple", "oak", "pine", "cedar", "elm", "willow", "birch", "spruce", "walnut",
    "chestnut", "magnolia", "sycamore", "juniper", "laurel", "hawthorne", "sunset", "lakeview", "ridge", "valley",
    "meadow", "harbor", "river", "park", "forest", "hillcrest", "fairview", "highland", "church", "mill",
    "market", "mission", "alameda", "stevens creek", "el camino", "university", "college", "lincoln", "washington", "jefferson",
    "franklin", "madison", "jackson", "adams", "monroe", "grant", "kennedy", "wolfe", "lawrence", "mathilda",
    "bascom", "winchester", "saratoga", "blossom", "almaden", "hamilton", "camden", "union", "bernardo", "mary",
)
STREET_SUFFIXES = ("road", "street", "avenue", "boulevard", "drive", "lane", "way", "court")

BUSINESS_KINDS = {
    "coffee shops": ("coffee", "cafe", "espresso bar", "roasters"),
    "pharmacies": ("pharmacy", "drugs", "apothecary", "health mart"),
    "restaurants": ("kitchen", "bistro", "grill", "diner", "tavern"),
    "gas stations": ("gas", "fuel", "service station", "petrol"),
    "hotels": ("hotel", "inn", "suites", "lodge"),
    "bakeries": ("bakery", "bread co", "pastry shop", "patisserie"),
}
BUSINESS_STEMS = (
    "blue bottle", "red rock", "golden gate", "silver leaf", "green apple", "sunrise", "moonlight", "harvest",
    "copper kettle", "iron horse", "little owl", "happy cow", "bright star", "old mill", "cornerstone", "riverside",
    "north beach", "lucky penny", "crimson", "evergreen", "oak tree", "pinecone", "wildflower", "honeybee",
    "blackbird", "snowflake", "driftwood", "lighthouse", "cobblestone", "maple leaf", "hummingbird", "peppermint",
    "rosewood", "sandstone", "starlight", "thistle", "tidewater", "velvet", "wagon wheel", "zephyr",
)

PHONE_LABELS = (
    "customer support", "front desk", "billing", "reservations", "main office", "help line",
    "sales", "appointments", "pharmacy counter", "delivery", "service desk", "concierge",
)

EMAIL_DOMAINS = ("example.com", "mail.com", "inbox.net", "post.org", "company.io")
URL_WORDS = (
    "recipes", "weather", "news", "travel", "books", "garden", "music", "sports", "photos", "deals",
    "hiking", "movies", "science", "history", "design", "fitness", "games", "cars", "pets", "art",
)

SONG_WORDS_A = (
    "midnight", "golden", "broken", "electric", "silent", "wild", "lonely", "crystal", "velvet", "burning",
    "endless", "shining", "hollow", "paper", "neon", "summer", "winter", "falling", "secret", "distant",
)
SONG_WORDS_B = (
    "river", "heart", "highway", "dreams", "skies", "city", "fire", "rain", "roses", "echoes",
    "shadows", "lights", "ocean", "garden", "train", "waves", "stars", "thunder", "mirrors", "horizon",
)
MOVIE_WORDS = (
    "the last voyage", "iron harbor", "night shift", "the quiet hour", "lost in tokyo", "desert wind",
    "the glass house", "northern lights", "the long road", "city of echoes", "the red door", "moon base",
    "deep water", "the silver key", "storm chasers", "the great escape plan", "hidden valley", "paper planes",
)

HOUSE_THINGS = (
    "house", "apartment", "condo", "cabin", "townhouse", "studio", "loft", "cottage",
)

# (region, capital) pairs for the rewrite data, plus country facts.
STATES = (
    ("ohio", "columbus"), ("texas", "austin"), ("california", "sacramento"), ("florida", "tallahassee"),
    ("new york", "albany"), ("illinois", "springfield"), ("georgia", "atlanta"), ("colorado", "denver"),
    ("arizona", "phoenix"), ("massachusetts", "boston"), ("washington", "olympia"), ("oregon", "salem"),
    ("nevada", "carson city"), ("utah", "salt lake city"), ("tennessee", "nashville"), ("virginia", "richmond"),
    ("michigan", "lansing"), ("minnesota", "saint paul"), ("wisconsin", "madison"), ("iowa", "des moines"),
    ("kansas", "topeka"), ("kentucky", "frankfort"), ("louisiana", "baton rouge"), ("maine", "augusta"),
    ("maryland", "annapolis"), ("missouri", "jefferson city"), ("montana", "helena"), ("nebraska", "lincoln"),
    ("new mexico", "santa fe"), ("north carolina", "raleigh"), ("oklahoma", "oklahoma city"), ("idaho", "boise"),
    ("indiana", "indianapolis"), ("hawaii", "honolulu"), ("alaska", "juneau"), ("vermont", "montpelier"),
    ("delaware", "dover"), ("arkansas", "little rock"), ("alabama", "montgomery"), ("mississippi", "jackson"),
)

COUNTRIES = (
    # (country, capital, currency, language)
    ("france", "paris", "euro", "french"), ("germany", "berlin", "euro", "german"),
    ("spain", "madrid", "euro", "spanish"), ("italy", "rome", "euro", "italian"),
    ("austria", "vienna", "euro", "german"), ("australia", "canberra", "australian dollar", "english"),
    ("united states", "washington dc", "us dollar", "english"), ("canada", "ottawa", "canadian dollar", "english"),
    ("mexico", "mexico city", "peso", "spanish"), ("brazil", "brasilia", "real", "portuguese"),
    ("argentina", "buenos aires", "peso", "spanish"), ("japan", "tokyo", "yen", "japanese"),
    ("china", "beijing", "yuan", "mandarin"), ("india", "new delhi", "rupee", "hindi"),
    ("russia", "moscow", "ruble", "russian"), ("egypt", "cairo", "egyptian pound", "arabic"),
    ("kenya", "nairobi", "shilling", "swahili"), ("nigeria", "abuja", "naira", "english"),
    ("niger", "niamey", "cfa franc", "french"), ("sweden", "stockholm", "krona", "swedish"),
    ("switzerland", "bern", "swiss franc", "german"), ("norway", "oslo", "krone", "norwegian"),
    ("denmark", "copenhagen", "krone", "danish"), ("finland", "helsinki", "euro", "finnish"),
    ("iran", "tehran", "rial", "persian"), ("iraq", "baghdad", "dinar", "arabic"),
    ("slovakia", "bratislava", "euro", "slovak"), ("slovenia", "ljubljana", "euro", "slovene"),
    ("portugal", "lisbon", "euro", "portuguese"), ("greece", "athens", "euro", "greek"),
    ("turkey", "ankara", "lira", "turkish"), ("poland", "warsaw", "zloty", "polish"),
    ("ireland", "dublin", "euro", "english"), ("united kingdom", "london", "pound", "english"),
    ("south korea", "seoul", "won", "korean"), ("north korea", "pyongyang", "won", "korean"),
    ("vietnam", "hanoi", "dong", "vietnamese"), ("thailand", "bangkok", "baht", "thai"),
    ("peru", "lima", "sol", "spanish"), ("chile", "santiago", "peso", "spanish"),
    ("colombia", "bogota", "peso", "spanish"), ("morocco", "rabat", "dirham", "arabic"),
    ("new zealand", "wellington", "new zealand dollar", "english"), ("iceland", "reykjavik", "krona", "icelandic"),
    ("netherlands", "amsterdam", "euro", "dutch"), ("belgium", "brussels", "euro", "french"),
    ("hungary", "budapest", "forint", "hungarian"), ("czech republic", "prague", "koruna", "czech"),
    ("romania", "bucharest", "leu", "romanian"), ("ukraine", "kyiv", "hryvnia", "ukrainian"),
    ("pakistan", "islamabad", "rupee", "urdu"), ("indonesia", "jakarta", "rupiah", "indonesian"),
    ("philippines", "manila", "peso", "filipino"), ("malaysia", "kuala lumpur", "ringgit", "malay"),
    ("ghana", "accra", "cedi", "english"), ("ethiopia", "addis ababa", "birr", "amharic"),
    ("cuba", "havana", "peso", "spanish"), ("jamaica", "kingston", "jamaican dollar", "english"),
    ("israel", "jerusalem", "shekel", "hebrew"), ("jordan", "amman", "dinar", "arabic"),
)

# Pairs a speech recognizer plausibly confuses; used to corrupt queries.
CONFUSABLE = (
    ("austria", "australia"), ("iran", "iraq"), ("niger", "nigeria"), ("sweden", "switzerland"),
    ("slovakia", "slovenia"), ("austin", "boston"), ("denmark", "germany"), ("india", "indonesia"),
    ("north korea", "south korea"), ("peru", "paris"), ("chile", "china"), ("mali", "bali"),
)

CITIES = tuple(sorted({c for _, c in STATES} | {c for _, c, _, _ in COUNTRIES}))

ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth")
