//! Recursive-descent formula parser.
//!
//! Grammar, loosest to tightest: `->` (right-associative), `|`, `&`, then
//! the prefix operators `!`, `K[agent]`, `M[agent]`, then `true`, `false`,
//! atoms, and parenthesized formulas. `true` and `false` are reserved words
//! and never parse as atoms.

use crate::logic::{Agent, Atom, Formula};

use super::lexer::{ParseResult, TokKind, TokenStream};

/// Parses a complete formula; trailing input is an error.
pub fn parse_formula(input: &str) -> ParseResult<Formula> {
    let mut ts = TokenStream::lex(input)?;
    let f = parse_formula_tokens(&mut ts)?;
    if !ts.at_eof() {
        return Err(ts.error_here(format!("unexpected {} after formula", ts.peek().kind)));
    }
    Ok(f)
}

/// Parses a formula from the current stream position, stopping at the first
/// token that cannot extend it (for example `;` or `}` in problem files).
pub fn parse_formula_tokens(ts: &mut TokenStream) -> ParseResult<Formula> {
    parse_implies(ts)
}

fn parse_implies(ts: &mut TokenStream) -> ParseResult<Formula> {
    let left = parse_or(ts)?;
    if ts.eat(&TokKind::Arrow) {
        let right = parse_implies(ts)?;
        Ok(Formula::implies(left, right))
    } else {
        Ok(left)
    }
}

fn parse_or(ts: &mut TokenStream) -> ParseResult<Formula> {
    let mut left = parse_and(ts)?;
    while ts.eat(&TokKind::Pipe) {
        let right = parse_and(ts)?;
        left = Formula::or(left, right);
    }
    Ok(left)
}

fn parse_and(ts: &mut TokenStream) -> ParseResult<Formula> {
    let mut left = parse_unary(ts)?;
    while ts.eat(&TokKind::Amp) {
        let right = parse_unary(ts)?;
        left = Formula::and(left, right);
    }
    Ok(left)
}

fn parse_modality(ts: &mut TokenStream) -> ParseResult<Agent> {
    ts.expect(&TokKind::LBracket, "after modality")?;
    let name = ts.expect_ident("an agent name")?;
    if name.contains('@') {
        return Err(ts.error_here(format!("`{name}` is not a valid agent name")));
    }
    ts.expect(&TokKind::RBracket, "after agent name")?;
    Ok(Agent::new(name))
}

fn parse_unary(ts: &mut TokenStream) -> ParseResult<Formula> {
    if ts.eat(&TokKind::Bang) {
        return Ok(Formula::not(parse_unary(ts)?));
    }
    // `K` and `M` are modalities only when followed by `[`; plain `K` is an
    // ordinary atom.
    if matches!(&ts.peek().kind, TokKind::Ident(name) if name == "K")
        && peek_second_is_lbracket(ts)
    {
        ts.next();
        let agent = parse_modality(ts)?;
        return Ok(Formula::knows(agent, parse_unary(ts)?));
    }
    if matches!(&ts.peek().kind, TokKind::Ident(name) if name == "M")
        && peek_second_is_lbracket(ts)
    {
        ts.next();
        let agent = parse_modality(ts)?;
        return Ok(Formula::poss(agent, parse_unary(ts)?));
    }
    parse_atomic(ts)
}

fn peek_second_is_lbracket(ts: &TokenStream) -> bool {
    ts.peek_at(1).kind == TokKind::LBracket
}

fn parse_atomic(ts: &mut TokenStream) -> ParseResult<Formula> {
    if ts.eat(&TokKind::LParen) {
        let f = parse_formula_tokens(ts)?;
        ts.expect(&TokKind::RParen, "to close the parenthesized formula")?;
        return Ok(f);
    }
    match ts.peek().kind.clone() {
        TokKind::Ident(name) if name == "true" => {
            ts.next();
            Ok(Formula::True)
        }
        TokKind::Ident(name) if name == "false" => {
            ts.next();
            Ok(Formula::False)
        }
        TokKind::Ident(name) => {
            ts.next();
            Ok(Formula::Atom(Atom::new(name)))
        }
        other => Err(ts.error_here(format!("expected a formula, found {other}"))),
    }
}
