//! Registered variable codes with their definitions and expected effect on
//! the net interest margin.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedSign {
    Positive,
    Negative,
    Ambiguous,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl ExpectedSign {
    pub fn symbol(self) -> &'static str {
        match self {
            ExpectedSign::Positive => "+",
            ExpectedSign::Negative => "-",
            ExpectedSign::Ambiguous => "?",
            ExpectedSign::NotApplicable => "",
        }
    }
}

/// Which block of the margin equation a regressor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Dependent,
    PureInterestMargin,
    BankSpecific,
    MacroMarket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableDef {
    pub code: &'static str,
    pub label: &'static str,
    pub description: &'static str,
    pub expected_sign: ExpectedSign,
    pub block: Block,
}

const fn def(
    code: &'static str,
    label: &'static str,
    description: &'static str,
    expected_sign: ExpectedSign,
    block: Block,
) -> VariableDef {
    VariableDef {
        code,
        label,
        description,
        expected_sign,
        block,
    }
}

use Block::*;
use ExpectedSign::*;

pub const VARIABLES: [VariableDef; 13] = [
    def("NIM", "Net Interest Margin %", "Net interest income divided by total assets", NotApplicable, Dependent),
    def("RA", "Risk Aversion %", "Equity over total assets", Ambiguous, PureInterestMargin),
    def("RBD", "Credit Risk %", "Non-performing loan over total loan", Positive, PureInterestMargin),
    def("OC", "Operating Cost %", "Operation cost over total assets", Ambiguous, PureInterestMargin),
    def("LOGTA", "Bank Size", "Logarithm of total assets", Ambiguous, PureInterestMargin),
    def("LQR", "Liquidity Ratio %", "Ratio of liquid assets to total assets", Negative, BankSpecific),
    def("MNGMT", "Management Quality %", "Total expenses over total generated revenues", Negative, BankSpecific),
    def("IIP", "Implicit Interest Payment %", "Net non-interest income over total assets", Positive, BankSpecific),
    def("DPZTG", "Deposits Growth %", "Quarterly growth of deposits", Negative, BankSpecific),
    def("DVRSTY", "Operation Diversity %", "Non-interest income over operating income", Negative, BankSpecific),
    def("HHI", "Herfindahl Index %", "Herfindahl index for assets", Positive, MacroMarket),
    def("GDP", "Real GDP Growth %", "Quarterly real GDP growth", Ambiguous, MacroMarket),
    def("INF", "Inflation %", "CPI growth rate", Positive, MacroMarket),
];

/// Extra series used only by the robustness scenarios.
pub const ROBUSTNESS_VARIABLES: [VariableDef; 3] = [
    def("MS", "Market Share %", "Bank assets over total banking-sector assets", Ambiguous, PureInterestMargin),
    def("CRDT", "Credit Size", "Loans over total assets", Ambiguous, BankSpecific),
    def("IIR", "Interbank Rate %", "Interbank overnight interest rate", Ambiguous, MacroMarket),
];

pub fn lookup(code: &str) -> Option<&'static VariableDef> {
    VARIABLES
        .iter()
        .chain(ROBUSTNESS_VARIABLES.iter())
        .find(|v| v.code == code)
}

pub fn codes_in_block(block: Block) -> Vec<String> {
    VARIABLES
        .iter()
        .filter(|v| v.block == block)
        .map(|v| v.code.to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirteen_codes_with_table_signs() {
        let codes: Vec<&str> = VARIABLES.iter().map(|v| v.code).collect();
        assert_eq!(
            codes,
            ["NIM", "RA", "RBD", "OC", "LOGTA", "LQR", "MNGMT", "IIP", "DPZTG", "DVRSTY", "HHI", "GDP", "INF"]
        );
        let signs: String = VARIABLES.iter().skip(1).map(|v| v.expected_sign.symbol()).collect();
        assert_eq!(signs, "?+??--+--+?+");
        assert_eq!(lookup("NIM").unwrap().expected_sign, NotApplicable);
    }

    #[test]
    fn block_partition() {
        assert_eq!(codes_in_block(PureInterestMargin), ["RA", "RBD", "OC", "LOGTA"]);
        assert_eq!(codes_in_block(BankSpecific), ["LQR", "MNGMT", "IIP", "DPZTG", "DVRSTY"]);
        assert_eq!(codes_in_block(MacroMarket), ["HHI", "GDP", "INF"]);
    }
}
