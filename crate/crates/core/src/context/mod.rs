//! Context for selections: structural scaffolding from the whole page
//! (title, headers, list and table labels) and budgeted growth around a
//! seed.

mod global;
mod local;

pub use global::{
    ctx_headers, ctx_html, ctx_lists, ctx_tables, ctx_title, HeadersPolicy, HtmlPolicy,
    ListsPolicy, Policy, TablesPolicy, TitlePolicy, UnknownPolicy,
};
pub use local::{context_cost, expand_local, expand_local_with, expansion_steps, Budget};
