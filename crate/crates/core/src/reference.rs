//! Published reference results used by the benchmark report for deltas.
//!
//! Accuracies are fractions in [0, 1]; regression entries are MSE on targets
//! scaled to [0, 1].

/// `(dataset, method, value)`
pub const REFERENCE: &[(&str, &str, f64)] = &[
    // binary classification, mean 5-fold CV accuracy
    ("liver-disorders", "lr", 0.7320),
    ("liver-disorders", "tv-gd", 0.7481),
    ("liver-disorders", "tv-lagle", 0.7362),
    ("liver-disorders", "ee-gd", 0.7432),
    ("liver-disorders", "ee-lagle", 0.7391),
    ("diabetes", "lr", 0.7796),
    ("diabetes", "tv-gd", 0.7750),
    ("diabetes", "tv-lagle", 0.7781),
    ("diabetes", "ee-gd", 0.7723),
    ("diabetes", "ee-lagle", 0.7810),
    ("breast-cancer", "lr", 0.9760),
    ("breast-cancer", "tv-gd", 0.9713),
    ("breast-cancer", "tv-lagle", 0.9772),
    ("breast-cancer", "ee-gd", 0.9713),
    ("breast-cancer", "ee-lagle", 0.9783),
    ("heart", "lr", 0.8426),
    ("heart", "tv-gd", 0.8005),
    ("heart", "tv-lagle", 0.8458),
    ("heart", "ee-gd", 0.8000),
    ("heart", "ee-lagle", 0.8496),
    ("australian", "lr", 0.8704),
    ("australian", "tv-gd", 0.8699),
    ("australian", "tv-lagle", 0.8701),
    ("australian", "ee-gd", 0.8654),
    ("australian", "ee-lagle", 0.8710),
    ("german-number", "lr", 0.7710),
    ("german-number", "tv-gd", 0.7619),
    ("german-number", "tv-lagle", 0.7710),
    ("german-number", "ee-gd", 0.7650),
    ("german-number", "ee-lagle", 0.7722),
    ("sonar", "lr", 0.9088),
    ("sonar", "tv-gd", 0.9030),
    ("sonar", "tv-lagle", 0.8927),
    ("sonar", "ee-gd", 0.9007),
    ("sonar", "ee-lagle", 0.9050),
    // multiclass, one-vs-all
    ("iris", "lr", 0.9533),
    ("iris", "tv-gd", 0.9600),
    ("iris", "tv-lagle", 0.9600),
    ("iris", "ee-gd", 0.9600),
    ("iris", "ee-lagle", 0.9600),
    ("balance", "lr", 0.8944),
    ("balance", "tv-gd", 0.9088),
    ("balance", "tv-lagle", 0.8992),
    ("balance", "ee-gd", 0.9040),
    ("balance", "ee-lagle", 0.9001),
    ("hayes", "lr", 0.7157),
    ("hayes", "tv-gd", 0.7787),
    ("hayes", "tv-lagle", 0.7308),
    ("hayes", "ee-gd", 0.7787),
    ("hayes", "ee-lagle", 0.7615),
    ("tae", "lr", 0.5947),
    ("tae", "tv-gd", 0.6418),
    ("tae", "tv-lagle", 0.6600),
    ("tae", "ee-gd", 0.6141),
    ("tae", "ee-lagle", 0.6600),
    ("wine", "lr", 0.9944),
    ("wine", "tv-gd", 0.9944),
    ("wine", "tv-lagle", 0.9943),
    ("wine", "ee-gd", 0.9944),
    ("wine", "ee-lagle", 0.9886),
    ("vehicle", "lr", 0.8275),
    ("vehicle", "tv-gd", 0.8500),
    ("vehicle", "tv-lagle", 0.8225),
    ("vehicle", "ee-gd", 0.8500),
    ("vehicle", "ee-lagle", 0.8284),
    ("glass", "lr", 0.7381),
    ("glass", "tv-gd", 0.6959),
    ("glass", "tv-lagle", 0.7619),
    ("glass", "ee-gd", 0.6772),
    ("glass", "ee-lagle", 0.7571),
    ("segment", "lr", 0.9180),
    ("segment", "tv-gd", 0.9080),
    ("segment", "tv-lagle", 0.9355),
    ("segment", "ee-gd", 0.9120),
    ("segment", "ee-lagle", 0.9589),
    ("flag", "lr", 0.5313),
    ("flag", "tv-gd", 0.4950),
    ("flag", "tv-lagle", 0.5210),
    ("flag", "ee-gd", 0.5055),
    ("flag", "ee-lagle", 0.5210),
    ("yeast", "lr", 0.5822),
    ("yeast", "tv-gd", 0.5795),
    ("yeast", "tv-lagle", 0.5791),
    ("yeast", "ee-gd", 0.5795),
    ("yeast", "ee-lagle", 0.5797),
    ("usps", "lr", 0.9490),
    ("usps", "tv-gd", 0.9440),
    ("usps", "tv-lagle", 0.9480),
    ("usps", "ee-gd", 0.9440),
    ("usps", "ee-lagle", 0.9500),
    // regression, MSE
    ("servo", "lr", 7.290e-3),
    ("servo", "tv-gd", 8.339e-3),
    ("servo", "ee-gd", 7.860e-3),
    ("machinecpu", "lr", 1.782e-3),
    ("machinecpu", "tv-gd", 1.907e-3),
    ("machinecpu", "ee-gd", 1.754e-3),
    ("autompg", "lr", 6.072e-3),
    ("autompg", "tv-gd", 5.620e-3),
    ("autompg", "ee-gd", 5.686e-3),
    ("concrete", "lr", 6.019e-3),
    ("concrete", "tv-gd", 5.432e-3),
    ("concrete", "ee-gd", 5.236e-3),
    ("housing", "lr", 5.130e-3),
    ("housing", "tv-gd", 4.897e-3),
    ("housing", "ee-gd", 4.951e-3),
    ("pyrim", "lr", 6.590e-3),
    ("pyrim", "tv-gd", 5.766e-3),
    ("pyrim", "ee-gd", 6.005e-3),
    ("triazines", "lr", 20.734e-3),
    ("triazines", "tv-gd", 20.515e-3),
    ("triazines", "ee-gd", 20.947e-3),
];

pub fn reference_value(dataset: &str, method: &str) -> Option<f64> {
    REFERENCE
        .iter()
        .find(|(d, m, _)| *d == dataset && *m == method)
        .map(|&(_, _, v)| v)
}
